"""Command-line front end: render figures from spec files or preset manifests.

Two entry styles::

    stemfluff-figures render --spec fig4.spec.json
    stemfluff-figures render --preset fig9 --in sweeps/ --out plots/

The preset form reads ``{name}.manifest.json`` from the input directory —
the same manifest the harness writes next to its CSVs — and drops
``{name}.png`` in the output directory.
"""

from __future__ import annotations

import argparse
import sys

from .render import EmptyDataError, MissingColumnError, render
from .spec import SpecError, load_spec, spec_from_manifest
import os


def render_preset(name, in_dir, out_dir):
    """Render one preset's figure from ``in_dir`` CSVs into ``out_dir``."""
    manifest_path = os.path.join(in_dir, f"{name}.manifest.json")
    if not os.path.exists(manifest_path):
        raise FileNotFoundError(f"no manifest {manifest_path}; run the "
                                f"harness preset first")
    spec = spec_from_manifest(manifest_path, out_dir)
    return render(spec)


def _cmd_render(args):
    if bool(args.spec) == bool(args.preset):
        print("render: pass exactly one of --spec PATH or --preset NAME",
              file=sys.stderr)
        return 2
    if args.spec:
        result = render(load_spec(args.spec))
    else:
        if not args.in_dir:
            print("render: --preset needs --in DIR", file=sys.stderr)
            return 2
        result = render_preset(args.preset, args.in_dir, args.out_dir)
    print(f"{result.path}: {result.series} series, {result.bands} bands, "
          f"{result.points} points")
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="stemfluff-figures",
        description="render stemfluff sweep CSVs into figures")
    subs = parser.add_subparsers(dest="command", required=True)

    sp = subs.add_parser("render", help="render one figure")
    sp.add_argument("--spec", metavar="PATH", help="figure spec JSON")
    sp.add_argument("--preset", metavar="NAME",
                    help="preset name; reads NAME.manifest.json from --in")
    sp.add_argument("--in", dest="in_dir", metavar="DIR",
                    help="directory holding the preset CSV and manifest")
    sp.add_argument("--out", dest="out_dir", metavar="DIR", default=".")
    sp.set_defaults(func=_cmd_render)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (SpecError, MissingColumnError, EmptyDataError,
            FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
