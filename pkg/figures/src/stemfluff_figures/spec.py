"""Figure descriptions: which CSV columns become the x axis, series, and bands.

A :class:`FigureSpec` is a pure data object.  It can be written by hand,
loaded from a small JSON file, or derived from the ``*.manifest.json`` that
the sweep harness drops next to each CSV — the manifest's ``axes`` block
uses exactly the same vocabulary.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass


class SpecError(ValueError):
    """A figure spec is malformed (bad JSON, unknown or missing keys)."""


@dataclass(frozen=True)
class FigureSpec:
    """Everything needed to turn sweep CSVs into one image.

    csv_paths  input CSV files (concatenated; identical headers expected)
    x          column plotted on the x axis (parsed as float)
    series     columns whose joint value defines one plotted line
    y          column averaged per (series, x) cell
    out        output image path
    aux_key    when set, keep only rows with this aux_key and read the
               y value from the aux_value column instead of ``y``
    bands      optional {"lower": key, "upper": key}; rows whose aux_key
               matches either key are drawn as a shaded band per series
               instead of contributing to the averages
    title      optional figure title
    """

    csv_paths: tuple[str, ...]
    x: str
    series: tuple[str, ...]
    y: str
    out: str
    aux_key: str | None = None
    bands: dict[str, str] | None = None
    title: str = ""

    def __post_init__(self):
        if isinstance(self.csv_paths, (str, os.PathLike)):
            object.__setattr__(self, "csv_paths", (os.fspath(self.csv_paths),))
        else:
            object.__setattr__(self, "csv_paths",
                               tuple(os.fspath(p) for p in self.csv_paths))
        if isinstance(self.series, str):
            object.__setattr__(self, "series", (self.series,))
        else:
            object.__setattr__(self, "series", tuple(self.series))
        if not self.csv_paths:
            raise SpecError("spec lists no input CSVs")
        if not self.series:
            raise SpecError("spec lists no series columns")
        if self.bands is not None:
            if set(self.bands) != {"lower", "upper"}:
                raise SpecError("bands must map exactly 'lower' and 'upper' "
                                f"to aux keys, got {sorted(self.bands)}")
            object.__setattr__(self, "bands", dict(self.bands))

    def referenced_columns(self):
        """Every CSV column this spec reads; all must exist in the header."""
        cols = [self.x, *self.series, self.y]
        if self.aux_key is not None or self.bands is not None:
            cols += ["aux_key", "aux_value"]
        seen, out = set(), []
        for c in cols:
            if c not in seen:
                seen.add(c)
                out.append(c)
        return out


_SPEC_KEYS = {"csv", "x", "series", "y", "out", "aux_key", "bands", "title"}
_REQUIRED = {"csv", "x", "series", "y", "out"}


def load_spec(path):
    """Read a FigureSpec from a JSON file.

    Relative CSV and output paths are resolved against the spec file's
    directory, so a spec can travel with its data.
    """
    with open(path, "r", encoding="utf-8") as fh:
        try:
            raw = json.load(fh)
        except json.JSONDecodeError as exc:
            raise SpecError(f"{path}: not valid JSON ({exc})") from exc
    if not isinstance(raw, dict):
        raise SpecError(f"{path}: expected a JSON object at top level")
    unknown = sorted(set(raw) - _SPEC_KEYS)
    if unknown:
        raise SpecError(f"{path}: unknown spec keys {unknown}")
    missing = sorted(_REQUIRED - set(raw))
    if missing:
        raise SpecError(f"{path}: missing required spec keys {missing}")
    base = os.path.dirname(os.path.abspath(path))
    csvs = raw["csv"]
    if isinstance(csvs, str):
        csvs = [csvs]
    return FigureSpec(
        csv_paths=tuple(os.path.join(base, c) for c in csvs),
        x=raw["x"],
        series=raw["series"],
        y=raw["y"],
        out=os.path.join(base, raw["out"]),
        aux_key=raw.get("aux_key"),
        bands=raw.get("bands"),
        title=raw.get("title", ""),
    )


def spec_from_manifest(manifest_path, out_dir):
    """Build a FigureSpec from a harness ``{preset}.manifest.json``.

    The manifest's ``files`` entries are taken relative to the manifest's
    own directory; the image lands in ``out_dir`` as ``{preset}.png``.
    """
    with open(manifest_path, "r", encoding="utf-8") as fh:
        manifest = json.load(fh)
    for key in ("preset", "files", "axes"):
        if key not in manifest:
            raise SpecError(f"{manifest_path}: manifest lacks {key!r}")
    axes = manifest["axes"]
    for key in ("x", "series", "y"):
        if key not in axes:
            raise SpecError(f"{manifest_path}: manifest axes lack {key!r}")
    base = os.path.dirname(os.path.abspath(manifest_path))
    name = manifest["preset"]
    return FigureSpec(
        csv_paths=tuple(os.path.join(base, f) for f in manifest["files"]),
        x=axes["x"],
        series=axes["series"],
        y=axes["y"],
        out=os.path.join(out_dir, f"{name}.png"),
        aux_key=axes.get("aux_key"),
        bands=axes.get("bands"),
        title=manifest.get("content", name),
    )
