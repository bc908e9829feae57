"""Command-line front end: graph generation, experiment runs, preset sweeps,
and closed-form bound tables.

Exit codes: 0 on success, 2 on configuration errors (bad flags, bad config
file, unknown preset).
"""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from .analytics import bounds_report
from .harness import (ConfigError, config_from_dict, parse_config_file,
                      run_experiment, run_preset, write_csv, serialize_graph,
                      PRESET_ALIASES, TOPOLOGIES, ESTIMATORS, DEPLOYMENT_MODES)
from .protocol import SCHEMES
from .topology import (assign_roles, gen_line_cycle, gen_exact_d_regular,
                       gen_p2p_approx_regular, gen_anonymity_approx4)


def _add_config_flags(sub):
    sub.add_argument("--config", metavar="PATH", help="flat key = value config file")
    sub.add_argument("--n", type=int)
    sub.add_argument("--eta", type=int)
    sub.add_argument("--d", type=int)
    sub.add_argument("--p", type=float)
    sub.add_argument("--q", type=float)
    sub.add_argument("--beta", type=float)
    sub.add_argument("--m", type=int)
    sub.add_argument("--trials", type=int)
    sub.add_argument("--seed", type=int)
    sub.add_argument("--topology", choices=TOPOLOGIES)
    sub.add_argument("--scheme", choices=SCHEMES)
    sub.add_argument("--estimator", choices=ESTIMATORS)
    sub.add_argument("--mode", choices=DEPLOYMENT_MODES, dest="deployment_mode")
    sub.add_argument("--supernode", action="store_true", default=None)
    sub.add_argument("--out", metavar="DIR", default=".")


def _collect_overrides(args):
    keys = ("n", "eta", "d", "p", "q", "beta", "m", "trials", "seed",
            "topology", "scheme", "estimator", "deployment_mode", "supernode")
    return {k: getattr(args, k) for k in keys if getattr(args, k, None) is not None}


def _cmd_gen_graph(args):
    raw = parse_config_file(args.config) if args.config else {}
    raw.update({k: str(v) for k, v in _collect_overrides(args).items()})
    config = config_from_dict(raw)
    rng = np.random.default_rng(config.seed)
    spy, supports = assign_roles(config.n, config.p, config.beta, rng)
    gen = {"line": lambda: gen_line_cycle(config.n, rng, spy=spy, supports=supports),
           "exact-regular": lambda: gen_exact_d_regular(config.n, config.d, rng,
                                                        spy=spy, supports=supports),
           "approx-regular": lambda: gen_p2p_approx_regular(config.n, config.eta, rng,
                                                            spy=spy, supports=supports),
           "approx-4-regular": lambda: gen_anonymity_approx4(config.n, rng, spy=spy,
                                                             supports=supports)}
    g = gen[config.topology]()
    os.makedirs(args.out, exist_ok=True)
    path = serialize_graph(g, os.path.join(args.out, "graph.edges"))
    print(path)
    return 0


def _cmd_run(args):
    raw = parse_config_file(args.config) if args.config else {}
    raw.update(_collect_overrides(args))
    config = config_from_dict(raw)
    rows = run_experiment(config)
    os.makedirs(args.out, exist_ok=True)
    path = config.out or os.path.join(args.out, f"{config.experiment}.csv")
    write_csv(rows, path)
    print(path)
    return 0


def _cmd_preset(args):
    overrides = {}
    if args.trials is not None:
        overrides["trials"] = args.trials
    if args.seed is not None:
        overrides["seed"] = args.seed
    files = run_preset(args.name, out_dir=args.out, overrides=overrides)
    for path in files.values():
        print(path)
    return 0


def _cmd_bounds(args):
    report = bounds_report(p=args.p, q=args.q, n=args.n, eta=args.eta,
                           beta=args.beta, mode=args.deployment_mode,
                           k=args.k, epsilon=args.epsilon,
                           delta_hop=args.delta_hop)
    print("name,value")
    for name, value in report.rows():
        print(f"{name},{value:.6f}")
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="stemfluff",
        description="stem/fluff relay simulation and deanonymization analytics")
    subs = parser.add_subparsers(dest="command", required=True)

    sp = subs.add_parser("gen-graph", help="generate and save a relay graph")
    _add_config_flags(sp)
    sp.set_defaults(func=_cmd_gen_graph)

    sp = subs.add_parser("run", help="run one experiment config, write a CSV")
    _add_config_flags(sp)
    sp.set_defaults(func=_cmd_run)

    sp = subs.add_parser("preset", help="run a named parameter sweep")
    sp.add_argument("name", choices=sorted(PRESET_ALIASES))
    sp.add_argument("--trials", type=int, help="override trials per point")
    sp.add_argument("--seed", type=int)
    sp.add_argument("--out", metavar="DIR", default=".")
    sp.set_defaults(func=_cmd_preset)

    sp = subs.add_parser("bounds", help="print closed-form bounds as name,value CSV")
    sp.add_argument("--p", type=float, required=True)
    sp.add_argument("--q", type=float, default=0.0)
    sp.add_argument("--n", type=int)
    sp.add_argument("--eta", type=int)
    sp.add_argument("--beta", type=float)
    sp.add_argument("--mode", choices=DEPLOYMENT_MODES[1:], dest="deployment_mode")
    sp.add_argument("--k", type=int)
    sp.add_argument("--epsilon", type=float)
    sp.add_argument("--delta-hop", type=float, default=0.3)
    sp.set_defaults(func=_cmd_bounds)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
