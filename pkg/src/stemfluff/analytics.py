"""Precision/recall scoring and the closed-form anonymity bounds.

Everything here is a pure function of its arguments.  The closed forms act as
oracles for the simulator (and vice versa: the test suite cross-validates each
formula against an independent Monte Carlo estimate).  Bounds derived only to
leading order, or holding only asymptotically in n, say so in their report
rather than pretending exactness.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from scipy.special import gammaln

E2_OVER_2PI = math.e ** 2 / (2.0 * math.pi)  # ≈ 1.1761, all-to-one upper slope


# ----------------------------------------------------------------------
# scoring


@dataclass
class PrecisionRecallReport:
    """Per-node and macro-averaged accusation accuracy.

    ``precision`` / ``recall`` are arithmetic means of D(v) / R(v) over the
    honest node set; a node nothing was mapped to contributes D(v) = 0, and a
    node that originated nothing contributes R(v) = 0.
    """

    nodes: np.ndarray
    d_per_node: np.ndarray
    r_per_node: np.ndarray
    precision: float
    recall: float
    assigned_txs: int
    unassigned_txs: int


def precision_recall(mapping, truth, honest_nodes):
    """Score an accusation mapping (tx -> node) against ground truth.

    D(v) = correctly-accused / all-accused at v; R(v) = fraction of v's own
    transactions mapped back to v.  ``truth`` must cover every mapped tx.
    """
    nodes = np.asarray(sorted(honest_nodes), dtype=np.int64)
    index = {int(v): i for i, v in enumerate(nodes)}
    mapped = np.zeros(len(nodes))
    correct = np.zeros(len(nodes))
    own = np.zeros(len(nodes))
    for tx, src in truth.items():
        i = index.get(int(src))
        if i is not None:
            own[i] += 1
    for tx, acc in mapping.items():
        if tx not in truth:
            raise ValueError(f"mapped tx {tx} missing from ground truth")
        i = index.get(int(acc))
        if i is None:
            continue  # accused node outside the honest candidate set
        mapped[i] += 1
        if truth[tx] == acc:
            correct[i] += 1
    with np.errstate(invalid="ignore"):
        d = np.where(mapped > 0, correct / np.maximum(mapped, 1), 0.0)
        r = np.where(own > 0, correct / np.maximum(own, 1), 0.0)
    return PrecisionRecallReport(
        nodes=nodes,
        d_per_node=d,
        r_per_node=r,
        precision=float(d.mean()) if len(nodes) else 0.0,
        recall=float(r.mean()) if len(nodes) else 0.0,
        assigned_txs=len(mapping),
        unassigned_txs=len(truth) - len(mapping),
    )


# ----------------------------------------------------------------------
# closed forms


class FundamentalBounds(NamedTuple):
    precision_floor: float
    recall_floor: float


def fundamental_bounds(p):
    """Estimator-independent floors: any adversary gets precision >= p^2, recall >= p."""
    if not 0.0 <= p <= 1.0:
        raise ValueError("p must be in [0, 1]")
    return FundamentalBounds(p * p, p)


def oto_first_spy_precision(p):
    """Expected first-spy macro precision on a large 4-regular relay graph
    under one-to-one forwarding: 2p²/(1−p)·ln((1+p)/(2p)).

    Defined for 0 < p < 1; the limits are 0 as p→0 (order p²·log(1/p)) and
    1 as p→1.
    """
    if not 0.0 < p < 1.0:
        raise ValueError("p must be strictly inside (0, 1)")
    return 2.0 * p * p / (1.0 - p) * math.log((1.0 + p) / (2.0 * p))


def ward_pmf(scheme, w, p):
    """P(|W| = w): size distribution of the set of fresh-transaction sources
    funneled onto one observed delivery edge.

    one-to-one: geometric, (2p/(1−p))·((1−p)/(1+p))^w.
    all-to-one: Catalan-weighted branching-process total,
    C(w)·((1−p)/2)^(w−1)·((1+p)/2)^(w+1), evaluated in log space.
    """
    if w < 1 or int(w) != w:
        raise ValueError("ward size must be an integer >= 1")
    w = int(w)
    if scheme == "one-to-one":
        if not 0.0 < p < 1.0:
            raise ValueError("one-to-one ward needs 0 < p < 1")
        return (2.0 * p / (1.0 - p)) * ((1.0 - p) / (1.0 + p)) ** w
    if scheme == "all-to-one":
        if not 0.0 <= p < 1.0:
            raise ValueError("all-to-one ward needs 0 <= p < 1")
        log_catalan = gammaln(2 * w + 1) - gammaln(w + 2) - gammaln(w + 1)
        log_tail = (w + 1) * math.log((1.0 + p) / 2.0)
        log_body = (w - 1) * math.log((1.0 - p) / 2.0) if w > 1 else 0.0
        return float(math.exp(log_catalan + log_body + log_tail))
    raise ValueError(f"unknown scheme for ward pmf: {scheme!r}")


def ward_pmf_values(scheme, p, w_max):
    """pmf over w = 1..w_max as an array (index 0 is w=1)."""
    return np.array([ward_pmf(scheme, w, p) for w in range(1, w_max + 1)])


def simulate_ward_size(scheme, p, trials, rng):
    """Monte Carlo ward sizes; returns counts indexed by ward size (index 0 unused).

    one-to-one: the ward is a predecessor line, truncated at the first spy
    (geometric) with a fair coin per surviving predecessor for whether its own
    traffic uses the funneled edge.  all-to-one: the ward is a binary tree
    where each child independently survives with probability (1−p)/2 (pruned
    by spies or by routing elsewhere), rooted at the observed node.
    """
    if not 0.0 < p < 1.0:
        raise ValueError("p must be strictly inside (0, 1)")
    if trials < 1:
        raise ValueError("trials must be >= 1")
    if scheme == "one-to-one":
        honest_run = rng.geometric(p, size=trials) - 1  # predecessors before the spy
        sizes = 1 + rng.binomial(honest_run, 0.5)
    elif scheme == "all-to-one":
        sizes = np.ones(trials, dtype=np.int64)
        alive = sizes.copy()
        while True:
            mask = alive > 0
            if not mask.any():
                break
            born = rng.binomial(2 * alive[mask], (1.0 - p) / 2.0)
            alive = np.zeros_like(alive)
            alive[mask] = born
            sizes += alive
    else:
        raise ValueError(f"unknown scheme for ward simulation: {scheme!r}")
    return np.bincount(sizes)


def ato_precision_bounds(p):
    """Leading-order first-spy precision bounds under all-to-one forwarding:
    (p/4, (e²/2π)·p).  O(p²) remainders are not included."""
    if not 0.0 <= p <= 1.0:
        raise ValueError("p must be in [0, 1]")
    return p / 4.0, E2_OVER_2PI * p


class MatchingBounds(NamedTuple):
    lower: float
    upper: float      # clamped to 1
    upper_raw: float  # = 2 * lower exactly


def matching_precision_bounds(p):
    """Max-weight-matching precision band on 4-regular graphs:
    (p+p²−2p³)/(1−p²) ≤ D ≤ 2·(p+p²−2p³)/(1−p²)."""
    if not 0.0 <= p < 1.0:
        raise ValueError("p must be in [0, 1)")
    lower = (p + p * p - 2.0 * p ** 3) / (1.0 - p * p)
    upper_raw = 2.0 * lower
    return MatchingBounds(lower, min(upper_raw, 1.0), upper_raw)


class Theorem1Check(NamedTuple):
    ok: bool
    margin: float


def theorem1_check(d_opt, d_fs, p, slack=0.0):
    """Optimal-vs-first-spy precision inequality: D_opt ≤ 8·D_fs + 6p² (+ slack).

    ``slack`` absorbs the O(p³) remainder and Monte Carlo error when both
    sides are measured.  Returns whether the inequality holds and by how much.
    """
    bound = 8.0 * d_fs + 6.0 * p * p + slack
    return Theorem1Check(d_opt <= bound, bound - d_opt)


def timer_threshold(k, delta_hop, epsilon):
    """Embargo timer scale so a k-hop stem survives all timers w.p. 1−ε:
    T_base = −k(k−1)·δ_hop / (2·ln(1−ε))."""
    if k < 1 or int(k) != k:
        raise ValueError("k must be an integer >= 1")
    if not 0.0 < epsilon < 1.0:
        raise ValueError("epsilon must be strictly inside (0, 1)")
    if delta_hop <= 0:
        raise ValueError("delta_hop must be positive")
    return -k * (k - 1) * delta_hop / (2.0 * math.log(1.0 - epsilon))


def expected_extra_delay(t_base, k):
    """Mean added latency when the k-th relay black-holes: T_base/k.

    The delay is the minimum of k exponential residuals, itself exponential,
    so its standard deviation equals the mean.
    """
    if k < 1 or int(k) != k:
        raise ValueError("k must be an integer >= 1")
    return t_base / k


# ----------------------------------------------------------------------
# bounds reporting


@dataclass
class BoundsReport:
    """Named scalar bounds with the parameters they were computed from.

    ``values`` holds raw formula outputs; ``clamped`` the same values pushed
    into [0, 1] for entries that denote probabilities.
    """

    params: dict = field(default_factory=dict)
    values: dict = field(default_factory=dict)
    clamped: dict = field(default_factory=dict)

    def add(self, name, value, probability=True):
        self.values[name] = float(value)
        self.clamped[name] = float(min(max(value, 0.0), 1.0)) if probability else float(value)

    def rows(self):
        """(name, clamped value) pairs in insertion order, for CSV printing."""
        return list(self.clamped.items())


def partial_deployment_recall_bounds(n, p, beta, q, eta, mode):
    """First-spy recall band when only a β-fraction of honest nodes deploy.

    Let f = p + (1−p)β be the fraction of apparent supporters.  With
    version-checking, relays pick supporter neighbors when they can; without
    it, a stem simply dies at its first non-supporter.  The upper bounds hold
    asymptotically in n; the report carries the operative finite-n form
    (``recall_upper``), its n→∞ limit (``recall_upper_limit``), and for
    version-checking a coarser union-style bound (``recall_upper_coarse``).

    Finite-n corrections: the spy share among apparent supporters is
    p·n/(f·n−1) (the source itself is not a candidate relay), and the
    no-supporting-neighbor probability uses supporter density f·n/(n−η)
    among the η without-replacement draws.
    """
    if mode not in ("version-checking", "no-version-checking"):
        raise ValueError(f"unknown deployment mode: {mode!r}")
    if not (0 < p < 1 and 0 <= beta <= 1 and 0 <= q <= 1):
        raise ValueError("parameters out of domain")
    if n <= eta or eta < 1:
        raise ValueError("need n > eta >= 1")
    f = p + (1.0 - p) * beta
    if f == 0.0:
        raise ValueError("no deployment: f = p + (1-p)*beta must be positive")
    n_honest = (1.0 - p) * n
    phi = 1.0 - (1.0 - 1.0 / (n - eta)) ** eta
    zeta = (1.0 - (1.0 - phi) ** n_honest) / (n_honest * phi)
    no_support = (1.0 - f) ** eta

    report = BoundsReport(params={
        "n": n, "p": p, "beta": beta, "q": q, "eta": eta, "mode": mode,
    })
    report.add("zeta", zeta)
    if mode == "version-checking":
        lower = (p / f) * (1.0 - no_support)
        spy_share_finite = p * n / (f * n - 1.0)
        reach_finite = 1.0 - (1.0 - min(f * n / (n - eta), 1.0)) ** eta
        upper_finite = reach_finite * (spy_share_finite + (1.0 - p / f) * q * zeta) + no_support
        upper_limit = (p / f + (1.0 - p / f) * q * zeta) * (1.0 - no_support) + no_support
        coarse = lower + no_support + (1.0 - p / f) * (1.0 - no_support) * zeta * (1.0 - beta)
        report.add("recall_lower", lower)
        report.add("recall_upper", upper_finite)
        report.add("recall_upper_limit", upper_limit)
        report.add("recall_upper_coarse", coarse)
    else:
        lower = p
        slack_mass = (1.0 - beta * (1.0 - q)) * (1.0 - p) * zeta
        upper_finite = p * n / (n - 1.0) + slack_mass * n_honest / (n_honest - 1.0)
        upper_limit = p + slack_mass
        report.add("recall_lower", lower)
        report.add("recall_upper", upper_finite)
        report.add("recall_upper_limit", upper_limit)
    return report


def bounds_report(p, q=0.0, n=None, eta=None, beta=None, mode=None,
                  k=None, epsilon=None, delta_hop=0.3):
    """Assemble every bound applicable to the given parameters into one report."""
    report = BoundsReport(params={
        "p": p, "q": q, "n": n, "eta": eta, "beta": beta, "mode": mode,
        "k": k, "epsilon": epsilon, "delta_hop": delta_hop,
    })
    floors = fundamental_bounds(p)
    report.add("precision_floor", floors.precision_floor)
    report.add("recall_floor", floors.recall_floor)
    if 0.0 < p < 1.0:
        report.add("oto_first_spy_precision", oto_first_spy_precision(p))
        mb = matching_precision_bounds(p)
        report.add("matching_precision_lower", mb.lower)
        report.add("matching_precision_upper", mb.upper_raw)
    ato = ato_precision_bounds(p)
    report.add("ato_precision_lower", ato[0])
    report.add("ato_precision_upper", ato[1])
    if k is not None and epsilon is not None:
        t_base = timer_threshold(k, delta_hop, epsilon)
        report.add("timer_t_base", t_base, probability=False)
        report.add("expected_extra_delay", expected_extra_delay(t_base, k),
                   probability=False)
    if None not in (n, eta, beta, mode) and 0.0 < p < 1.0:
        pd = partial_deployment_recall_bounds(n, p, beta, q, eta, mode)
        for name, value in pd.values.items():
            report.add(f"partial_{name}", value)
    return report
