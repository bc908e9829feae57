"""Config-driven Monte Carlo experiment runner with CSV persistence.

A single :class:`ExperimentConfig` fully determines an experiment: graph
family and roles, forwarding scheme, fluff probability, estimator, trial
count, and the seed.  ``run_experiment`` executes the trials (optionally on a
process pool; results are byte-identical either way because every trial draws
from its own child generator seeded by ``(seed, trial)``) and returns one
:class:`TrialRow` per trial.  ``run_preset`` bundles the named parameter
sweeps used throughout the docs, writing one CSV per sweep plus a JSON
manifest describing the axes so plots can be regenerated from files alone.
"""

from __future__ import annotations

import json
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, asdict

import numpy as np

from . import _engine
from .adversary import (ObservationLog, first_spy_estimate, matching_estimate,
                        routing_aware_estimate, train_signatures,
                        per_source_histograms, classify_batch)
from .analytics import (precision_recall, partial_deployment_recall_bounds,
                        timer_threshold)
from .protocol import (Record, Tx, TimerConfig, sample_epoch_routing, stem_route,
                       propagate, diffuse, simulate_black_hole, SCHEMES,
                       default_hop_cap)
from .topology import (Digraph, assign_roles, gen_line_cycle, gen_exact_d_regular,
                       gen_p2p_approx_regular, gen_anonymity_approx4,
                       embed_partial_deployment, apply_supernode_edges)

CSV_HEADER = ("experiment,topology,n,eta,d,p,q,beta,scheme,estimator,mode,"
              "m,trial,seed,avg_precision,avg_recall,aux_key,aux_value")

TOPOLOGIES = ("line", "exact-regular", "approx-regular", "approx-4-regular")
ESTIMATORS = ("first-spy", "matching", "routing-aware", "intersection", "none")
DEPLOYMENT_MODES = ("none", "version-checking", "no-version-checking")


class ConfigError(ValueError):
    """Invalid experiment configuration (CLI maps this to exit code 2)."""


@dataclass
class ExperimentConfig:
    experiment: str = "experiment"
    n: int = 100
    eta: int = 8
    d: int = 4
    p: float = 0.1
    q: float = 0.0
    beta: float = 1.0
    m: int = 1
    trials: int = 10
    seed: int = 1
    topology: str = "exact-regular"
    deployment_mode: str = "none"
    scheme: str = "one-to-one"
    estimator: str = "first-spy"
    supernode: bool = False
    knows_graph: bool = False
    knows_routing: bool = False
    stem_mode: str = "hop-coin"       # hop-coin | epoch-diffuser
    observation: str = "full"         # full | stem-only
    drop_policy: str = "relay"
    t_base: float | None = None
    delta_hop: float = 0.3
    fluff_rate: float = 1.0
    train_walks: int = 2000
    workers: int = 1
    out: str | None = None

    def __post_init__(self):
        self.validate()

    def validate(self):
        for name in ("p", "q", "beta"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ConfigError(f"{name}={v} outside [0, 1]")
        if self.trials < 1:
            raise ConfigError("trials must be >= 1")
        if self.m < 1:
            raise ConfigError("m must be >= 1")
        if self.n < 2:
            raise ConfigError("n must be >= 2")
        if self.topology not in TOPOLOGIES:
            raise ConfigError(f"unknown topology {self.topology!r}")
        if self.scheme not in SCHEMES:
            raise ConfigError(f"unknown scheme {self.scheme!r}")
        if self.estimator not in ESTIMATORS:
            raise ConfigError(f"unknown estimator {self.estimator!r}")
        if self.deployment_mode not in DEPLOYMENT_MODES:
            raise ConfigError(f"unknown deployment mode {self.deployment_mode!r}")
        if self.stem_mode not in ("hop-coin", "epoch-diffuser"):
            raise ConfigError(f"unknown stem mode {self.stem_mode!r}")
        if self.observation not in ("full", "stem-only"):
            raise ConfigError(f"unknown observation mode {self.observation!r}")
        if self.deployment_mode != "none" and self.topology != "approx-regular":
            raise ConfigError("partial deployment embeds into an approx-regular "
                              "connectivity graph; set topology=approx-regular")
        if self.deployment_mode != "none" and self.beta <= 0.0:
            raise ConfigError("partial deployment needs beta > 0 (some adopters)")
        if self.deployment_mode != "none" and self.estimator == "intersection":
            raise ConfigError("intersection estimation assumes every relay "
                              "supports stem forwarding; incompatible with "
                              "partial deployment")
        if self.estimator == "routing-aware" and self.scheme != "one-to-one":
            raise ConfigError("routing-aware estimation needs one-to-one forwarding")

    @property
    def mode_label(self) -> str:
        if self.deployment_mode != "none":
            return self.deployment_mode
        if self.drop_policy == "drop-all":
            return "drop-all"
        return self.stem_mode


@dataclass
class TrialRow:
    experiment: str
    topology: str
    n: int
    eta: int
    d: int
    p: float
    q: float
    beta: float
    scheme: str
    estimator: str
    mode: str
    m: int
    trial: int
    seed: int
    avg_precision: float
    avg_recall: float
    aux_key: str
    aux_value: float


# ----------------------------------------------------------------------
# trial execution


def _build_graphs(config, rng):
    """Returns (relay graph H, connectivity graph G); identical when there is
    no embedding step."""
    support_frac = 1.0 if config.deployment_mode == "none" else config.beta
    spy, supports = assign_roles(config.n, config.p, support_frac, rng)
    if config.topology == "line":
        g0 = gen_line_cycle(config.n, rng, spy=spy, supports=supports)
    elif config.topology == "exact-regular":
        g0 = gen_exact_d_regular(config.n, config.d, rng, spy=spy, supports=supports)
    elif config.topology == "approx-regular":
        g0 = gen_p2p_approx_regular(config.n, config.eta, rng, spy=spy, supports=supports)
    else:
        g0 = gen_anonymity_approx4(config.n, rng, spy=spy, supports=supports)
    if config.deployment_mode != "none":
        g = g0
        h = embed_partial_deployment(g, config.d, config.deployment_mode, rng)
    else:
        h = g = g0
    if config.supernode:
        if h is g:
            h = g = apply_supernode_edges(h)
        else:
            h = apply_supernode_edges(h)
            g = apply_supernode_edges(g)
    return h, g


def _origin_population(config, h):
    """Nodes that originate transactions and are scored.

    Under partial deployment only the adopters (supporting honest nodes) are
    the population whose anonymity is being measured; non-supporters transact
    old-style and are not part of the studied cohort.
    """
    if config.deployment_mode == "none":
        return h.honest_nodes
    return np.flatnonzero(~h.spy & h.supports)


def _fast_first_spy_applicable(config):
    return (config.estimator == "first-spy" and config.scheme == "one-to-one"
            and config.q == 0.0 and config.m == 1
            and config.deployment_mode == "none"
            and config.stem_mode == "hop-coin")


def _fast_first_spy_trial(config, h, g, routing, rng):
    """Deterministic one-to-one stems at q=0 via the vectorized kernel.

    Walks that end in a routing loop (rare) fall back to a scalar diffusion
    so the measured semantics match the generic path exactly.
    """
    honest = h.honest_nodes
    starts = routing.own_edge[honest]
    term, spy_node, deliverer, fluff_at, hops = _engine.walk_deterministic_q0(
        h.targets, h.tails, h.spy, routing.edge_next, starts)
    truth = {int(i): int(v) for i, v in enumerate(honest)}
    mapping = {}
    for i in range(len(honest)):
        if term[i] == _engine.SPY_HIT:
            mapping[i] = int(deliverer[i])
        elif config.observation == "full":
            tx = Tx(i, int(honest[i]))
            recs, _ = diffuse(tx, g, int(fluff_at[i]), rng, rate=config.fluff_rate,
                              start_time=hops[i] * config.delta_hop)
            if recs:
                mapping[i] = int(recs[0][0])
    return mapping, truth, float(hops.mean())


def _intersection_trial(config, h, routing, rng):
    """Train per-candidate first-spy signatures, then classify m txs/source.

    Training always samples memoryless walks (the adversary knows the graph,
    not the epoch routing).  The observed transactions follow the configured
    scheme: fresh draws per hop under per-transaction forwarding, the fixed
    epoch edge map otherwise — so deterministic schemes hand the classifier m
    copies of the same report.
    """
    table = train_signatures(h, config.q, config.train_walks, rng)
    honest = h.honest_nodes
    m = config.m
    truth = {int(i * m + j): int(s)
             for i, s in enumerate(honest) for j in range(m)}
    records = []
    hop_counts = []
    if config.scheme == "per-transaction":
        sources = np.repeat(honest, m)
        term, spy_node, deliverer, _, hops = _engine.walk_memoryless(
            h.indptr, h.targets, h.spy, sources, config.q, rng,
            default_hop_cap(config.q))
        hop_counts = hops
        records = [Record(int(i), int(deliverer[i]), int(spy_node[i]),
                          float(hops[i] * config.delta_hop), "stem")
                   for i in np.flatnonzero(term == _engine.SPY_HIT)]
    elif config.q == 0.0 and routing.diffuser is None and h.supports.all():
        starts = routing.own_edge[honest]
        term, spy_node, deliverer, _, hops = _engine.walk_deterministic_q0(
            h.targets, h.tails, h.spy, routing.edge_next, starts)
        hop_counts = np.repeat(hops, m)
        for i in np.flatnonzero(term == _engine.SPY_HIT):
            t = float(hops[i] * config.delta_hop)
            records.extend(Record(int(i * m + j), int(deliverer[i]),
                                  int(spy_node[i]), t, "stem")
                           for j in range(m))
    else:
        for tx_id, src in truth.items():
            out = stem_route(Tx(tx_id, src), h, routing, config.q, rng)
            hop_counts.append(out.stem_length)
            records.extend(Record(tx_id, o.deliverer, o.spy,
                                  o.hop * config.delta_hop, "stem")
                           for o in out.observations)
        hop_counts = np.asarray(hop_counts)
    log = ObservationLog(records)
    src_order, hists = per_source_histograms(log, truth, table.spies)
    accused, _ = classify_batch(hists, table, rng)
    by_source = {int(s): int(a) for s, a in zip(src_order, accused)}
    mapping = {tx: by_source[src] for tx, src in truth.items() if src in by_source}
    return mapping, truth, float(hop_counts.mean())


def _generic_trial(config, h, g, routing, rng):
    """Reference path: scalar propagation per transaction, then estimation."""
    origins = _origin_population(config, h)
    truth = {}
    records = []
    stem_lengths = []
    tx_id = 0
    for src in origins:
        for _ in range(config.m):
            tx = Tx(tx_id, int(src))
            truth[tx_id] = int(src)
            recs, outcome = propagate(tx, h, g, routing, config.q, rng,
                                      delta_hop=config.delta_hop,
                                      fluff_rate=config.fluff_rate)
            if config.observation == "stem-only":
                recs = [r for r in recs if r.phase == "stem"]
            records.extend(recs)
            stem_lengths.append(outcome.stem_length)
            tx_id += 1
    log = ObservationLog(records,
                         knows_graph=config.estimator in ("matching", "routing-aware"),
                         knows_routing=config.estimator == "routing-aware")
    if config.estimator == "first-spy":
        mapping = first_spy_estimate(log)
    elif config.estimator == "matching":
        mapping = matching_estimate(log, h, config.q, rng)
    elif config.estimator == "routing-aware":
        mapping = routing_aware_estimate(log, h, routing, config.q, rng)
    else:
        mapping = {}
    return mapping, truth, float(np.mean(stem_lengths)) if stem_lengths else 0.0


def run_trial(config, trial):
    """One self-contained trial: fresh graphs, one epoch of routing, m txs per
    honest node, estimation, scoring.  Deterministic in (config, trial)."""
    rng = np.random.default_rng([config.seed, trial])
    try:
        h, g = _build_graphs(config, rng)
        diffuser_prob = config.q if config.stem_mode == "epoch-diffuser" else None
        routing = sample_epoch_routing(h, config.scheme, rng,
                                       diffuser_prob=diffuser_prob)
        if config.estimator == "intersection":
            mapping, truth, stem_mean = _intersection_trial(config, h, routing, rng)
        elif _fast_first_spy_applicable(config):
            mapping, truth, stem_mean = _fast_first_spy_trial(config, h, g, routing, rng)
        else:
            mapping, truth, stem_mean = _generic_trial(config, h, g, routing, rng)
    except ConfigError:
        raise
    except Exception as exc:
        raise RuntimeError(
            f"trial {trial} failed for experiment={config.experiment!r} "
            f"(topology={config.topology}, estimator={config.estimator})") from exc
    report = precision_recall(mapping, truth, _origin_population(config, h))
    if config.estimator == "intersection":
        aux_key, aux_value = "intersection_recall", report.recall
    else:
        aux_key, aux_value = "stem_length_mean", stem_mean
    return TrialRow(
        experiment=config.experiment, topology=config.topology, n=config.n,
        eta=config.eta, d=config.d, p=config.p, q=config.q, beta=config.beta,
        scheme=config.scheme, estimator=config.estimator, mode=config.mode_label,
        m=config.m, trial=trial, seed=config.seed,
        avg_precision=report.precision, avg_recall=report.recall,
        aux_key=aux_key, aux_value=aux_value)


def run_experiment(config):
    """All trials for one config, in trial order (workers don't change output)."""
    config.validate()
    if config.workers > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            rows = list(pool.map(run_trial, [config] * config.trials,
                                 range(config.trials), chunksize=8))
    else:
        rows = [run_trial(config, t) for t in range(config.trials)]
    rows.sort(key=lambda r: r.trial)
    return rows


# ----------------------------------------------------------------------
# CSV and graph persistence


def _fmt(value):
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, float):
        return f"{value:.6f}"
    return str(value)


def write_csv(rows, path):
    """Write trial rows under the fixed 18-column header (UTF-8, LF)."""
    if not rows:
        raise ValueError(f"refusing to write empty CSV: {path}")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(CSV_HEADER + "\n")
        for row in rows:
            d = asdict(row)
            fh.write(",".join(_fmt(d[k]) for k in CSV_HEADER.split(",")) + "\n")
    return path


def serialize_graph(g, path):
    """Edge list (`n <count>` header, one `src dst` per line) plus a `.roles`
    sidecar with one `node role support` line per node (role h=honest, a=adversary)."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"n {g.n}\n")
        tails = g.tails
        for e in range(g.edge_count):
            fh.write(f"{tails[e]} {g.targets[e]}\n")
    with open(path + ".roles", "w", encoding="utf-8", newline="\n") as fh:
        for v in range(g.n):
            role = "a" if g.spy[v] else "h"
            fh.write(f"{v} {role} {1 if g.supports[v] else 0}\n")
    return path


def load_graph(path):
    """Inverse of :func:`serialize_graph`; parse errors name the bad line."""
    rows = None
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            parts = line.split()
            if not parts:
                continue
            if lineno == 1:
                if len(parts) != 2 or parts[0] != "n" or not parts[1].isdigit():
                    raise ValueError(f"{path}:{lineno}: expected header 'n <count>', got {line.strip()!r}")
                rows = [[] for _ in range(int(parts[1]))]
                continue
            try:
                src, dst = int(parts[0]), int(parts[1])
            except (ValueError, IndexError):
                raise ValueError(f"{path}:{lineno}: malformed edge line {line.strip()!r}") from None
            if len(parts) != 2 or not 0 <= src < len(rows) or not 0 <= dst < len(rows):
                raise ValueError(f"{path}:{lineno}: edge {line.strip()!r} out of range")
            rows[src].append(dst)
    if rows is None:
        raise ValueError(f"{path}:1: empty graph file")
    n = len(rows)
    spy = np.zeros(n, dtype=bool)
    supports = np.ones(n, dtype=bool)
    roles_path = path + ".roles"
    with open(roles_path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            parts = line.split()
            if not parts:
                continue
            if len(parts) != 3 or parts[1] not in ("h", "a") or parts[2] not in ("0", "1"):
                raise ValueError(f"{roles_path}:{lineno}: malformed role line {line.strip()!r}")
            v = int(parts[0])
            if not 0 <= v < n:
                raise ValueError(f"{roles_path}:{lineno}: node {v} out of range")
            spy[v] = parts[1] == "a"
            supports[v] = parts[2] == "1"
    return Digraph.from_rows(rows, spy=spy, supports=supports)


# ----------------------------------------------------------------------
# config files


def parse_config_file(path):
    """Flat `key = value` format; '#' starts a comment."""
    out = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
            key, _, value = line.partition("=")
            out[key.strip()] = value.strip()
    return out


_BOOL_KEYS = {"supernode", "knows_graph", "knows_routing"}
_INT_KEYS = {"n", "eta", "d", "m", "trials", "seed", "train_walks", "workers"}
_FLOAT_KEYS = {"p", "q", "beta", "t_base", "delta_hop", "fluff_rate"}


def config_from_dict(raw):
    """Coerce string values (from a config file or CLI) into an ExperimentConfig."""
    kwargs = {}
    valid = set(ExperimentConfig.__dataclass_fields__)
    for key, value in raw.items():
        key = key.strip().replace("-", "_")
        if key not in valid:
            raise ConfigError(f"unknown config key {key!r}")
        if value is None:
            continue
        if key in _BOOL_KEYS and isinstance(value, str):
            if value.lower() not in ("0", "1", "true", "false", "yes", "no"):
                raise ConfigError(f"bad boolean for {key!r}: {value!r}")
            value = value.lower() in ("1", "true", "yes")
        elif key in _INT_KEYS and isinstance(value, str):
            value = int(value)
        elif key in _FLOAT_KEYS and isinstance(value, str):
            value = float(value)
        kwargs[key] = value
    try:
        return ExperimentConfig(**kwargs)
    except TypeError as exc:
        raise ConfigError(str(exc)) from None


# ----------------------------------------------------------------------
# presets

P_GRID = [round(0.05 * i, 2) for i in range(1, 11)]  # 0.05 .. 0.50
BETA_GRID = [round(0.1 * i, 1) for i in range(1, 10)]  # 0.1 .. 0.9

PRESET_ALIASES = {
    "fig4": "estimator-gap-line-vs-4regular",
    "fig5": "forwarding-scheme-comparison",
    "fig6": "intersection-recall",
    "fig7": "approx-vs-exact-4regular",
    "fig8": "fluff-probability-effect",
    "fig8m": "supernode-misbehaving-adversary",
    "fig9": "partial-deployment-recall",
    "blackhole": "black-hole-embargo",
    "tradeoff-appC": "adversary-knowledge-tradeoff",
}


def run_preset(name, out_dir=".", overrides=None):
    """Run one named sweep; returns {file label: path}.

    Desk-scale trial counts are sized so the plotted probabilities carry
    standard errors below 0.01; every preset finishes well inside 30 minutes
    on one core.  ``overrides`` (e.g. {'trials': 5, 'seed': 9}) apply to every
    point of the sweep — handy for smoke tests.
    """
    if name not in PRESET_ALIASES:
        raise ConfigError(f"unknown preset {name!r} (choose from {sorted(PRESET_ALIASES)})")
    os.makedirs(out_dir, exist_ok=True)
    overrides = dict(overrides or {})
    content = PRESET_ALIASES[name]
    seed = int(overrides.pop("seed", 20240601))
    builder = {
        "fig4": _preset_fig4, "fig5": _preset_fig5, "fig6": _preset_fig6,
        "fig7": _preset_fig7, "fig8": _preset_fig8, "fig8m": _preset_fig8m,
        "fig9": _preset_fig9, "blackhole": _preset_blackhole,
        "tradeoff-appC": _preset_tradeoff,
    }[name]
    files, manifest = builder(out_dir, seed, overrides)
    manifest.update({"preset": name, "content": content, "seed": seed,
                     "csv_header": CSV_HEADER})
    manifest_path = os.path.join(out_dir, f"{name}.manifest.json")
    with open(manifest_path, "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    files["manifest"] = manifest_path
    return files


def _cfg(**kwargs):
    return ExperimentConfig(**kwargs)


def _run_points(configs):
    rows = []
    for cfg in configs:
        rows.extend(run_experiment(cfg))
    return rows


def _apply_overrides(cfg_kwargs, overrides):
    cfg_kwargs.update(overrides)
    return cfg_kwargs


def _preset_fig4(out_dir, seed, overrides):
    configs = []
    for topology, d in (("line", 2), ("exact-regular", 4)):
        for estimator in ("first-spy", "matching"):
            for p in P_GRID:
                kw = dict(experiment="estimator-gap", topology=topology, n=50,
                          d=d, p=p, q=0.0, scheme="one-to-one",
                          estimator=estimator, trials=150, seed=seed)
                configs.append(_cfg(**_apply_overrides(kw, overrides)))
    path = os.path.join(out_dir, "fig4.csv")
    write_csv(_run_points(configs), path)
    manifest = {
        "files": ["fig4.csv"],
        "axes": {"x": "p", "series": ["topology", "estimator"], "y": "avg_precision"},
        "notes": ["n=50; one-to-one forwarding at q=0; first-spy vs "
                  "graph-aware matching on the two relay families"],
    }
    return {"fig4": path}, manifest


def _preset_fig5(out_dir, seed, overrides):
    configs = []
    for scheme in SCHEMES:
        for p in P_GRID:
            kw = dict(experiment="scheme-comparison", topology="exact-regular",
                      n=100, d=4, p=p, q=0.0, scheme=scheme,
                      estimator="first-spy", trials=150, seed=seed)
            configs.append(_cfg(**_apply_overrides(kw, overrides)))
    path = os.path.join(out_dir, "fig5.csv")
    write_csv(_run_points(configs), path)
    manifest = {
        "files": ["fig5.csv"],
        "axes": {"x": "p", "series": ["scheme"], "y": "avg_precision"},
        "notes": ["n=100 exact 4-regular, q=0, first-spy precision per "
                  "forwarding scheme"],
    }
    return {"fig5": path}, manifest


def _preset_fig6(out_dir, seed, overrides):
    configs = []
    for m in (1, 5, 10):
        for p in (0.1, 0.2, 0.3, 0.4, 0.5):
            kw = dict(experiment="intersection-recall", topology="exact-regular",
                      n=400, d=4, p=p, q=0.0, m=m, scheme="per-transaction",
                      estimator="intersection", train_walks=1000, trials=10,
                      seed=seed)
            configs.append(_cfg(**_apply_overrides(kw, overrides)))
    path = os.path.join(out_dir, "fig6.csv")
    write_csv(_run_points(configs), path)
    manifest = {
        "files": ["fig6.csv"],
        "axes": {"x": "p", "series": ["m"], "y": "aux_value",
                 "aux_key": "intersection_recall"},
        "notes": ["n=400 exact 4-regular, per-transaction forwarding, "
                  "signature tables from 1000 walks per candidate"],
    }
    return {"fig6": path}, manifest


def _preset_fig7(out_dir, seed, overrides):
    configs = []
    for topology in ("exact-regular", "approx-4-regular"):
        for p in P_GRID[:8]:  # 0.05 .. 0.40, the band the comparison targets
            kw = dict(experiment="approx-vs-exact", topology=topology, n=100,
                      d=4, p=p, q=0.0, scheme="one-to-one", estimator="matching",
                      trials=250, seed=seed)
            configs.append(_cfg(**_apply_overrides(kw, overrides)))
    path = os.path.join(out_dir, "fig7.csv")
    write_csv(_run_points(configs), path)
    manifest = {
        "files": ["fig7.csv"],
        "axes": {"x": "p", "series": ["topology"], "y": "avg_precision"},
        "notes": ["matching-estimator precision: exact 4-regular vs "
                  "two-uniform-picks approximation, n=100"],
    }
    return {"fig7": path}, manifest


def _q_effect_configs(seed, overrides, supernode):
    configs = []
    for q in (0.0, 0.1, 0.2, 0.5):
        for p in (0.05, 0.10, 0.15, 0.20, 0.30):
            kw = dict(experiment="fluff-probability-effect",
                      topology="approx-4-regular", n=300, d=4, p=p, q=q,
                      scheme="one-to-one", estimator="first-spy",
                      stem_mode="epoch-diffuser", supernode=supernode,
                      trials=60, seed=seed)
            configs.append(_cfg(**_apply_overrides(kw, overrides)))
    return configs


def _preset_fig8(out_dir, seed, overrides):
    path = os.path.join(out_dir, "fig8.csv")
    write_csv(_run_points(_q_effect_configs(seed, overrides, supernode=False)), path)
    manifest = {
        "files": ["fig8.csv"],
        "axes": {"x": "p", "series": ["q"], "y": "avg_precision"},
        "notes": ["first-spy precision vs p per fluff probability; "
                  "per-epoch diffuser flags; protocol-following spies"],
    }
    return {"fig8": path}, manifest


def _preset_fig8m(out_dir, seed, overrides):
    path = os.path.join(out_dir, "fig8m.csv")
    write_csv(_run_points(_q_effect_configs(seed, overrides, supernode=True)), path)
    manifest = {
        "files": ["fig8m.csv"],
        "axes": {"x": "p", "series": ["q"], "y": "avg_precision"},
        "notes": ["as fig8 but spies rewired as a supernode "
                  "(outbound edges to every honest peer)"],
    }
    return {"fig8m": path}, manifest


def _preset_fig9(out_dir, seed, overrides):
    rows = []
    for mode in ("version-checking", "no-version-checking"):
        for beta in BETA_GRID:
            kw = dict(experiment="partial-deployment-recall",
                      topology="approx-regular", n=1000, eta=8, d=4, p=0.2,
                      q=0.2, beta=beta, deployment_mode=mode,
                      scheme="one-to-one", estimator="first-spy", trials=30,
                      seed=seed)
            cfg = _cfg(**_apply_overrides(kw, overrides))
            rows.extend(run_experiment(cfg))
            bounds = partial_deployment_recall_bounds(cfg.n, cfg.p, beta, cfg.q,
                                                      cfg.eta, mode)
            for key, aux in (("recall_bound_lower", "recall_lower"),
                             ("recall_bound_upper", "recall_upper")):
                rows.append(TrialRow(
                    experiment=cfg.experiment, topology=cfg.topology, n=cfg.n,
                    eta=cfg.eta, d=cfg.d, p=cfg.p, q=cfg.q, beta=beta,
                    scheme=cfg.scheme, estimator="analytic-bound", mode=mode,
                    m=cfg.m, trial=0, seed=cfg.seed, avg_precision=0.0,
                    avg_recall=0.0, aux_key=key,
                    aux_value=bounds.clamped[aux]))
    path = os.path.join(out_dir, "fig9.csv")
    write_csv(rows, path)
    manifest = {
        "files": ["fig9.csv"],
        "axes": {"x": "beta", "series": ["mode"], "y": "avg_recall",
                 "bands": {"lower": "recall_bound_lower",
                           "upper": "recall_bound_upper"}},
        "notes": ["simulated first-spy recall under partial deployment at "
                  "p=q=0.2, n=1000, eta=8; analytic recall band rows carry "
                  "estimator=analytic-bound with the band values in aux_value"],
    }
    return {"fig9": path}, manifest


def _preset_blackhole(out_dir, seed, overrides):
    trials = int(overrides.get("trials", 3000))
    delta_hop = 0.3
    rows = []
    for k in (5, 10):
        h = _stem_path_graph(k)
        for j, eps in enumerate((0.01, 0.02, 0.05, 0.10, 0.20)):
            t_base = timer_threshold(k, delta_hop, eps)
            timers = TimerConfig(t_base=t_base, delta_hop=delta_hop)
            for t in range(trials):
                rng = np.random.default_rng([seed, k, j, t])
                routing = sample_epoch_routing(h, "per-transaction", rng)
                out = simulate_black_hole(Tx(0, 0), h, h, routing, 0.0, timers,
                                          "drop-all", rng)
                rows.append(TrialRow(
                    experiment="black-hole-embargo", topology="line", n=k + 1,
                    eta=0, d=2, p=1.0 / (k + 1), q=0.0, beta=eps,
                    scheme="per-transaction", estimator="none", mode="drop-all",
                    m=1, trial=t, seed=seed, avg_precision=0.0, avg_recall=0.0,
                    aux_key="premature", aux_value=float(out.premature)))
    path = os.path.join(out_dir, "blackhole.csv")
    write_csv(rows, path)
    manifest = {
        "files": ["blackhole.csv"],
        "axes": {"x": "beta", "series": ["n"], "y": "aux_value",
                 "aux_key": "premature"},
        "notes": ["beta column carries the timer failure budget epsilon; "
                  "n = k+1 encodes the forced-drop hop k; aux_value is the "
                  "per-trial premature-diffusion indicator"],
    }
    return {"blackhole": path}, manifest


def _preset_tradeoff(out_dir, seed, overrides):
    configs = []
    for estimator in ("first-spy", "matching", "routing-aware"):
        for p in P_GRID[:8]:
            kw = dict(experiment="knowledge-tradeoff", topology="exact-regular",
                      n=100, d=4, p=p, q=0.0, scheme="one-to-one",
                      estimator=estimator, trials=150, seed=seed)
            configs.append(_cfg(**_apply_overrides(kw, overrides)))
    path = os.path.join(out_dir, "tradeoff-appC.csv")
    write_csv(_run_points(configs), path)
    manifest = {
        "files": ["tradeoff-appC.csv"],
        "axes": {"x": "p", "series": ["estimator"], "y": "avg_precision"},
        "notes": ["precision gained per knowledge level: log only, log+graph, "
                  "log+graph+routing (n=100 exact 4-regular, q=0)"],
    }
    return {"tradeoff-appC": path}, manifest


def _stem_path_graph(k):
    """Directed path of k honest relays feeding one terminal spy."""
    rows = [[i + 1] for i in range(k)] + [[]]
    spy = np.zeros(k + 1, dtype=bool)
    spy[k] = True
    return Digraph.from_rows(rows, spy=spy)
