"""Source-deanonymization estimators run by colluding logging peers.

Every estimator consumes an :class:`ObservationLog` — the pooled records of
all spies — and returns a mapping from transaction id to the accused source
node.  The estimators differ in what the adversary is assumed to know:

* first-spy: nothing beyond the log; accuse whoever delivered each
  transaction to a spy first.
* matching: the relay graph; accuse via a maximum-weight assignment of
  transactions to distinct honest nodes, weighting each candidate by the
  likelihood of the observed delivery under a memoryless stem walk.
* routing-aware: the relay graph *and* the epoch's forwarding decisions;
  walk the deterministic edge chain backwards from the observed delivery.
* intersection: long-term traffic signatures; match each source's empirical
  first-spy histogram against per-candidate signature distributions learned
  from simulated walks.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linear_sum_assignment

from .protocol import Record, default_hop_cap
from . import _engine

_LOG_ZERO = -1.0e30  # stand-in for log(0) that the assignment solver accepts


@dataclass
class ObservationLog:
    """Pooled spy observations plus what side knowledge the adversary holds."""

    records: list[Record] = field(default_factory=list)
    knows_graph: bool = False
    knows_routing: bool = False

    def add(self, records):
        self.records.extend(records)

    def first_records(self) -> dict[int, Record]:
        """Earliest record per transaction (ties: lowest deliverer, then spy)."""
        firsts: dict[int, Record] = {}
        for rec in self.records:
            cur = firsts.get(rec.tx_id)
            if cur is None or (rec.time, rec.deliverer, rec.spy) < (cur.time, cur.deliverer, cur.spy):
                firsts[rec.tx_id] = rec
        return firsts


def validate_log(log, g):
    """Check log invariants against the graph (used by tests and the harness)."""
    for rec in log.records:
        if g.spy[rec.deliverer]:
            raise ValueError(f"record {rec}: deliverer is a spy")
        if not g.spy[rec.spy]:
            raise ValueError(f"record {rec}: observer is not a spy")
        if rec.time < 0:
            raise ValueError(f"record {rec}: negative time")


def invert_mapping(mapping):
    """Accused node -> list of transaction ids charged to it."""
    out: dict[int, list[int]] = {}
    for tx, v in mapping.items():
        out.setdefault(v, []).append(tx)
    return out


# ----------------------------------------------------------------------
# first-spy


def first_spy_estimate(log):
    """Accuse each transaction's earliest deliverer."""
    return {tx: rec.deliverer for tx, rec in log.first_records().items()}


# ----------------------------------------------------------------------
# likelihood-weighted assignment (matching / routing-aware)


def _honest_reverse_hops(h, target):
    """Directed hop count v -> target over honest-only paths, -1 if unreachable.

    BFS over inbound edges from ``target``; only honest nodes are expanded, so
    every path counted stays inside the honest relay set (the endpoint itself
    is the observed deliverer and is honest by log invariant).
    """
    in_indptr, in_edges = h.in_index()
    tails = h.tails
    dist = np.full(h.n, -1, dtype=np.int64)
    dist[target] = 0
    frontier = [target]
    d = 0
    while frontier:
        d += 1
        nxt = []
        for x in frontier:
            for e in in_edges[in_indptr[x]:in_indptr[x + 1]]:
                u = tails[e]
                if dist[u] < 0 and not h.spy[u]:
                    dist[u] = d
                    nxt.append(int(u))
        frontier = nxt
    return dist


def _assign_rounds(tx_ids, candidates, logw, rng):
    """Max-weight assignment of txs to distinct candidates, in rounds.

    Transactions are matched in tx-id order; when there are more transactions
    than candidates, candidates become available again once every one of them
    has been used (round-based reuse).  Ties between equally good assignments
    are broken uniformly at random (noise far below any real weight
    difference): transaction and node labels carry no information in the
    model, so a solver preference correlated with them would smuggle in
    accuracy no adversary has.
    """
    mapping: dict[int, int] = {}
    for lo in range(0, len(tx_ids), len(candidates)):
        block = logw[lo:lo + len(candidates)]
        noisy = block + rng.uniform(0.0, 1e-9, size=block.shape)
        rows, cols = linear_sum_assignment(noisy, maximize=True)
        for r, c in zip(rows, cols):
            mapping[tx_ids[lo + r]] = int(candidates[c])
    return mapping


def matching_estimate(log, h, q, rng=None):
    """Graph-aware assignment: candidates weighted by stem-walk likelihood.

    A candidate ``v`` explains an observation delivered by ``w`` with
    likelihood ``((1-q)/d)**(hops(v,w)) * (1/d)`` — one uniform edge choice per
    hop plus the final delivery, and a survived fluff coin per intermediate
    relay — where hops are counted over honest-only directed paths.
    """
    if rng is None:
        rng = np.random.default_rng(0)
    firsts = log.first_records()
    if not firsts:
        return {}
    tx_ids = sorted(firsts)
    candidates = h.honest_nodes
    degs = h.out_degrees
    d_out = int(np.bincount(degs[candidates]).argmax())  # modal relay degree

    hop_counts = {}
    for tx in tx_ids:
        w = firsts[tx].deliverer
        if w not in hop_counts:
            hop_counts[w] = _honest_reverse_hops(h, w)[candidates]

    logw = np.full((len(tx_ids), len(candidates)), _LOG_ZERO)
    with np.errstate(divide="ignore"):
        log_decay = np.log(1.0 - q) - np.log(d_out)
    if not np.isfinite(log_decay):  # q == 1: only direct deliveries count
        log_decay = _LOG_ZERO
    for i, tx in enumerate(tx_ids):
        hops = hop_counts[firsts[tx].deliverer]
        ok = hops >= 0
        logw[i, ok] = hops[ok] * log_decay - np.log(d_out)
    logw = np.maximum(logw, _LOG_ZERO)

    if np.all(logw <= _LOG_ZERO):
        return first_spy_estimate(log)
    return _assign_rounds(tx_ids, candidates, logw, rng)


def routing_aware_estimate(log, h, routing, q, rng=None):
    """Assignment armed with the epoch's actual one-to-one forwarding state.

    From each observed delivery edge the deterministic chain of inbound edges
    is walked backwards; an honest node on that chain would have reached the
    same spy with probability ``(1-q)**(j-1)`` after ``j`` hops, averaged over
    its outbound edges.  Only one-to-one forwarding is supported: its global
    edge map is (near-)invertible, which is what makes the backward walk
    well-defined.
    """
    if routing.scheme != "one-to-one":
        raise ValueError("routing-aware estimation requires one-to-one forwarding")
    if rng is None:
        rng = np.random.default_rng(0)
    firsts = log.first_records()
    if not firsts:
        return {}
    tx_ids = sorted(firsts)
    candidates = h.honest_nodes
    tails = h.tails
    degs = h.out_degrees

    inv = np.full(h.edge_count, -1, dtype=np.int64)
    src = np.flatnonzero(routing.edge_next >= 0)
    inv[routing.edge_next[src]] = src  # per-node injection: no collisions

    scores = np.zeros((len(tx_ids), h.n))
    for i, tx in enumerate(tx_ids):
        rec = firsts[tx]
        row = h.out_neighbors(rec.deliverer)
        pos = np.flatnonzero(row == rec.spy)
        if not len(pos):
            continue  # delivery not on a relay edge (fluff record): no chain
        e = int(h.indptr[rec.deliverer] + pos[0])
        seen = set()
        depth = 0
        while e >= 0 and e not in seen:
            seen.add(e)
            depth += 1
            v = int(tails[e])
            if h.spy[v]:
                break  # upstream traffic is captured at this spy first
            scores[i, v] += (1.0 - q) ** (depth - 1) / degs[v]
            e = int(inv[e])

    cand_scores = scores[:, candidates]
    if not np.any(cand_scores > 0):
        return first_spy_estimate(log)
    with np.errstate(divide="ignore"):
        logw = np.where(cand_scores > 0, np.log(np.maximum(cand_scores, 1e-300)), _LOG_ZERO)
    return _assign_rounds(tx_ids, candidates, logw, rng)


# ----------------------------------------------------------------------
# intersection attack


@dataclass
class SignatureTable:
    """Per-candidate first-spy distributions learned from simulated walks."""

    candidates: np.ndarray  # honest node ids, ascending
    spies: np.ndarray       # spy node ids, ascending
    probs: np.ndarray       # (candidates, spies); rows sum to 1
    n_walks: int

    @property
    def epsilon(self) -> float:
        """Additive smoothing used on both signature and empirical histograms."""
        return 1.0 / (self.n_walks * len(self.spies))


def train_signatures(h, q, n_walks, rng, hop_cap=None):
    """Estimate each honest node's first-spy distribution from fresh walks.

    Runs ``n_walks`` memoryless stem walks per candidate on the relay graph
    and histograms which spy first sees each walk.  Walks that fluff before
    meeting a spy carry no first-spy identity and are dropped; a candidate
    with no observed walks at all gets a uniform row.
    """
    if not h.supports.all():
        raise ValueError("signature training expects a fully supporting relay set")
    candidates = h.honest_nodes
    spies = h.spy_nodes
    if not len(spies):
        raise ValueError("no spies to train against")
    if hop_cap is None:
        hop_cap = default_hop_cap(q)

    sources = np.repeat(candidates, n_walks)
    term, spy_node, _, _, _ = _engine.walk_memoryless(
        h.indptr, h.targets, h.spy, sources, q, rng, hop_cap)

    spy_col = np.full(h.n, -1, dtype=np.int64)
    spy_col[spies] = np.arange(len(spies))
    row = np.repeat(np.arange(len(candidates)), n_walks)
    hit = term == _engine.SPY_HIT
    flat = row[hit] * len(spies) + spy_col[spy_node[hit]]
    counts = np.bincount(flat, minlength=len(candidates) * len(spies))
    counts = counts.reshape(len(candidates), len(spies)).astype(float)

    totals = counts.sum(axis=1, keepdims=True)
    probs = np.divide(counts, totals, out=np.full_like(counts, 1.0 / len(spies)),
                      where=totals > 0)
    return SignatureTable(candidates, spies, probs, int(n_walks))


def per_source_histograms(log, truth, spies):
    """Group observed first-spy identities by true source.

    ``truth`` maps tx id -> source.  Returns ``(sources, hists)`` where
    ``sources`` lists every source in the truth map (ascending) and row i of
    ``hists`` counts, over spy ids in ``spies`` order, which spy first saw
    each of that source's transactions.  Sources none of whose transactions
    were observed keep an all-zero row.
    """
    spies = np.asarray(spies)
    spy_col = {int(s): j for j, s in enumerate(spies)}
    sources = np.array(sorted(set(truth.values())), dtype=np.int64)
    src_row = {int(v): i for i, v in enumerate(sources)}
    hists = np.zeros((len(sources), len(spies)), dtype=np.int64)
    for tx, rec in log.first_records().items():
        hists[src_row[truth[tx]], spy_col[rec.spy]] += 1
    return sources, hists


def classify_batch(hists, table, rng):
    """Accuse one candidate per histogram row by minimum KL divergence.

    Both the empirical histogram and the signature rows receive the table's
    additive smoothing before the divergence is computed; ties resolve to the
    lowest candidate id.  All-zero histograms carry no signal and draw a
    uniformly random accusation (flagged in the returned mask).
    """
    hists = np.atleast_2d(np.asarray(hists, dtype=float))
    eps = table.epsilon
    n_spies = len(table.spies)
    model = (table.probs + eps) / (1.0 + eps * n_spies)
    log_model = np.log(model)

    totals = hists.sum(axis=1, keepdims=True)
    emp = (hists + eps) / (totals + eps * n_spies)
    # argmin KL(emp || model) == argmax sum_s emp_s * log model_{v,s}
    scores = emp @ log_model.T
    accused = table.candidates[np.argmax(scores, axis=1)]

    random_mask = totals[:, 0] == 0
    k = int(random_mask.sum())
    if k:
        accused = accused.copy()
        accused[random_mask] = rng.choice(table.candidates, size=k)
    return accused, random_mask


def intersection_classify(hist, table, rng):
    """Single-source version of :func:`classify_batch`: ``(accused, was_random)``."""
    accused, random_mask = classify_batch(np.asarray(hist)[None, :], table, rng)
    return int(accused[0]), bool(random_mask[0])
