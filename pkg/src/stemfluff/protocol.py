"""Two-phase transaction broadcast: deterministic-ish stem relay, then diffusion.

A transaction starts in the *stem* phase, forwarded along the anonymity relay
graph one peer at a time according to the epoch's routing decisions.  Each
honest relay after the first flips a coin and, with probability ``q``, switches
the transaction to the *fluff* phase, where it spreads by plain diffusion with
independent exponential delays per link.

The adversary model is honest-but-curious spies: they log the first time they
receive a transaction (and from whom) but otherwise cannot be distinguished
from honest peers.  Since every estimator in :mod:`stemfluff.adversary` only
consumes the earliest record per transaction, simulation of a transaction stops
once any spy has seen it; nothing measurable happens afterwards.  The black
hole variant (spies silently dropping instead of relaying) is simulated
separately together with the embargo timers that defend against it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from heapq import heappush, heappop
from typing import NamedTuple

import numpy as np

from . import _engine

SCHEMES = ("per-transaction", "one-to-one", "all-to-one", "per-incoming-edge")


class Record(NamedTuple):
    """One logged delivery: which spy saw which transaction from whom, when."""

    tx_id: int
    deliverer: int
    spy: int
    time: float
    phase: str  # 'stem' | 'fluff'

# Hop-cap rule for memoryless walks, which have no loop detection: generous
# enough that hitting it is a ~(1-q)^(50/q) event, i.e. effectively never.
def default_hop_cap(q: float) -> int:
    return 50 * math.ceil(1.0 / max(q, 0.01))


@dataclass(frozen=True)
class Tx:
    """A transaction: identity plus ground-truth source."""

    tx_id: int
    source: int
    seq: int = 0


@dataclass(frozen=True)
class TimerConfig:
    """Embargo timer parameters: expected timeout and per-hop stem latency."""

    t_base: float
    delta_hop: float = 0.3


class StemObservation(NamedTuple):
    deliverer: int
    spy: int
    hop: int


@dataclass
class EpochRouting:
    """One epoch's forwarding decisions on the relay graph.

    ``edge_next`` maps each relay edge slot to the outbound edge slot the head
    node uses for transactions arriving on it (deterministic schemes only;
    ``None`` for per-transaction, where every hop draws fresh).  ``own_edge``
    is the outbound edge a node uses for transactions it originates itself;
    per-transaction routing ignores it and draws the first hop fresh per
    transaction like any other.  ``diffuser``, when present, marks nodes that
    skip relaying entirely this epoch and diffuse everything immediately
    (the epoch-wide relay/diffuser dichotomy); when ``None`` the per-hop coin
    is used instead.
    """

    scheme: str
    own_edge: np.ndarray
    edge_next: np.ndarray | None = None
    diffuser: np.ndarray | None = None


@dataclass
class StemOutcome:
    path: list[int]
    stem_length: int
    termination: str  # 'spy-hit' | 'fluff-entry' | 'loop' | 'hop-cap'
    fluff_origin: int | None
    observations: list[StemObservation] = field(default_factory=list)


def sample_epoch_routing(h, scheme, rng, diffuser_prob=None):
    """Draw an epoch's routing state for relay graph ``h``.

    one-to-one maps a node's inbound edges to distinct outbound edges (a
    uniform random injection; if a node has more inbound than outbound edges
    the outbound permutation is reused cyclically).  all-to-one sends every
    inbound edge to one per-epoch choice.  per-incoming-edge picks an outbound
    edge independently per inbound edge, with replacement.  ``diffuser_prob``
    switches on per-epoch diffuser flags with that probability.
    """
    if scheme not in SCHEMES:
        raise ValueError(f"unknown forwarding scheme: {scheme!r}")
    degs = np.diff(h.indptr)
    honest_sinks = np.flatnonzero((degs == 0) & ~h.spy)
    if len(honest_sinks):
        raise ValueError(f"honest node {honest_sinks[0]} has no outbound relay edge")

    own_edge = np.full(h.n, -1, dtype=np.int64)
    has_out = degs > 0
    offs = (rng.random(h.n) * degs).astype(np.int64)
    own_edge[has_out] = h.indptr[:-1][has_out] + offs[has_out]

    edge_next = None
    if scheme == "one-to-one" and h.edge_count == 2 * h.n and np.all(degs == 2):
        in_indptr, in_edges = h.in_index()
        if np.all(np.diff(in_indptr) == 2):
            edge_next = _engine.oto_routing_2out(h.indptr, in_indptr, in_edges, rng)
    if scheme != "per-transaction" and edge_next is None:
        edge_next = np.full(h.edge_count, -1, dtype=np.int64)
        in_indptr, in_edges = h.in_index()
        for v in range(h.n):
            inbound = in_edges[in_indptr[v]:in_indptr[v + 1]]
            dv = degs[v]
            if len(inbound) == 0 or dv == 0:
                continue
            out_slots = np.arange(h.indptr[v], h.indptr[v + 1], dtype=np.int64)
            if scheme == "one-to-one":
                src_order = rng.permutation(len(inbound))
                dst_order = rng.permutation(dv)
                for i, src in enumerate(src_order):
                    edge_next[inbound[src]] = out_slots[dst_order[i % dv]]
            elif scheme == "all-to-one":
                edge_next[inbound] = own_edge[v]
            else:  # per-incoming-edge
                edge_next[inbound] = out_slots[rng.integers(0, dv, size=len(inbound))]
    diffuser = None
    if diffuser_prob is not None:
        diffuser = rng.random(h.n) < diffuser_prob
    return EpochRouting(scheme=scheme, own_edge=own_edge,
                        edge_next=edge_next, diffuser=diffuser)


def stem_route(tx, h, routing, q, rng, hop_cap=None):
    """Walk one transaction along the stem until it hits a spy or fluffs.

    The source relays unconditionally; every later honest relay first checks
    the epoch diffuser flag (or flips the fluff coin with probability ``q``
    when per-hop coins are in use) *after* receiving.  Non-supporting relays
    always diffuse immediately.  Deterministic schemes detect routing loops by
    a repeated (node, inbound-edge) pair and fluff at the repeat; memoryless
    walks rely on the hop cap instead.
    """
    source = tx.source
    if h.spy[source]:
        raise ValueError("transactions originate at honest nodes")
    per_tx = routing.scheme == "per-transaction"
    if hop_cap is None and per_tx:
        hop_cap = default_hop_cap(q)

    path = [source]
    if not h.supports[source] or (routing.diffuser is not None and routing.diffuser[source]):
        return StemOutcome(path, 0, "fluff-entry", source)

    if per_tx:
        deg = h.out_degree(source)
        edge = h.indptr[source] + int(rng.integers(0, deg))
    else:
        edge = int(routing.own_edge[source])
    seen = None if per_tx else set()

    hop = 0
    while True:
        hop += 1
        w = int(h.targets[edge])
        path.append(w)
        u = path[-2]
        if h.spy[w]:
            obs = StemObservation(deliverer=u, spy=w, hop=hop)
            return StemOutcome(path, hop, "spy-hit", None, [obs])
        if not per_tx:
            if edge in seen:  # second arrival over the same inbound edge
                return StemOutcome(path, hop, "loop", w)
            seen.add(edge)
        if not h.supports[w]:
            return StemOutcome(path, hop, "fluff-entry", w)
        if routing.diffuser is not None:
            if routing.diffuser[w]:
                return StemOutcome(path, hop, "fluff-entry", w)
        elif q > 0.0 and rng.random() < q:
            return StemOutcome(path, hop, "fluff-entry", w)
        if per_tx:
            if hop >= hop_cap:
                return StemOutcome(path, hop, "hop-cap", w)
            edge = h.indptr[w] + int(rng.integers(0, h.out_degree(w)))
        else:
            edge = int(routing.edge_next[edge])
            if edge < 0:
                # no routing state for this arrival (degenerate graph); diffuse here
                return StemOutcome(path, hop, "fluff-entry", w)


def diffuse(tx, g, origin, rng, rate=1.0, start_time=0.0, stop_at_first_spy=True):
    """Diffuse a transaction from ``origin`` over the undirected closure of ``g``.

    Every node forwards to all its neighbors with i.i.d. Exp(rate) link delays;
    each node processes only its first receipt.  A spy's first receipt from an
    honest deliverer produces an observation record.  Returns
    ``(records, receipt_times)`` where records are ``(deliverer, spy, time)``
    triples; with ``stop_at_first_spy`` the simulation ends at the first record
    and ``receipt_times`` covers only the nodes reached by then.
    """
    und_indptr, und_targets = g.undirected()
    receipt = np.full(g.n, np.inf)
    receipt[origin] = start_time
    records = []
    heap = []

    def push_from(u, t):
        neigh = und_targets[und_indptr[u]:und_indptr[u + 1]]
        delays = rng.exponential(scale=1.0 / rate, size=len(neigh))
        for x, dt in zip(neigh, delays):
            if receipt[x] == np.inf:
                heappush(heap, (t + dt, int(x), u))

    push_from(origin, start_time)
    while heap:
        t, w, u = heappop(heap)
        if receipt[w] != np.inf:
            continue
        receipt[w] = t
        if g.spy[w] and not g.spy[u]:
            records.append((u, w, t))
            if stop_at_first_spy:
                break
        push_from(w, t)
    return records, receipt


def propagate(tx, h, g, routing, q, rng, delta_hop=0.3, fluff_rate=1.0,
              stop_at_first_spy=True, hop_cap=None):
    """Run one transaction through stem and (if reached) fluff.

    ``h`` is the relay graph, ``g`` the connectivity graph used for diffusion.
    Stem hops each take ``delta_hop`` time.  Returns ``(records, stem_outcome)``
    where records are :class:`Record` entries ordered by time.
    """
    out = stem_route(tx, h, routing, q, rng, hop_cap=hop_cap)
    records = [Record(tx.tx_id, o.deliverer, o.spy, o.hop * delta_hop, "stem")
               for o in out.observations]
    if out.termination == "spy-hit" and stop_at_first_spy:
        return records, out
    if out.fluff_origin is not None:
        t0 = out.stem_length * delta_hop
        fl, _ = diffuse(tx, g, out.fluff_origin, rng, rate=fluff_rate,
                        start_time=t0, stop_at_first_spy=stop_at_first_spy)
        records.extend(Record(tx.tx_id, u, s, t, "fluff") for (u, s, t) in fl)
    return records, out


@dataclass
class BlackHoleOutcome:
    diffused: bool
    diffusing_relay: int | None
    elapsed: float
    premature: bool
    path: list[int]


def simulate_black_hole(tx, h, g, routing, q, timers, drop_policy, rng, hop_cap=None):
    """Stem walk with embargo timers against message-dropping spies.

    Every honest holder arms an Exp(t_base) timer on receipt.  If the stem
    completes normally (fluff entry) before any timer fires, diffusion begins
    there; otherwise the earliest-firing relay diffuses.  Under the
    ``drop-all`` policy a spy swallows the transaction, so the only way it
    ever diffuses is through a timer.  ``premature`` reports whether a timer
    fired while the stem was still progressing through honest relays, i.e.
    before the last honest holder received the transaction (under ``relay``
    policy and a coin/diffuser stop: before the natural fluff entry).
    ``elapsed`` is the time diffusion begins.
    """
    if drop_policy not in ("relay", "drop-all"):
        raise ValueError(f"unknown drop policy: {drop_policy!r}")
    source = tx.source
    if h.spy[source]:
        raise ValueError("transactions originate at honest nodes")
    per_tx = routing.scheme == "per-transaction"
    if hop_cap is None and per_tx:
        hop_cap = default_hop_cap(q)
    delta = timers.delta_hop

    path = [source]
    fires = [0.0 + rng.exponential(scale=timers.t_base)]
    armed = [source]

    def finish(natural_end_time, natural_relay):
        """natural_relay None means the stem stalled (black hole drop)."""
        tau = min(fires)
        if natural_relay is not None and natural_end_time <= tau:
            return BlackHoleOutcome(True, natural_relay, natural_end_time,
                                    False, path)
        relay = armed[fires.index(tau)]
        last_honest_receipt = (len(armed) - 1) * delta
        return BlackHoleOutcome(True, relay, tau, tau < last_honest_receipt, path)

    if not h.supports[source] or (routing.diffuser is not None and routing.diffuser[source]):
        return finish(0.0, source)

    if per_tx:
        edge = h.indptr[source] + int(rng.integers(0, h.out_degree(source)))
    else:
        edge = int(routing.own_edge[source])
    seen = None if per_tx else set()

    hop = 0
    while True:
        hop += 1
        t = hop * delta
        w = int(h.targets[edge])
        path.append(w)
        if not per_tx:
            if edge in seen:
                return finish(t, w)
            seen.add(edge)
        if h.spy[w]:
            if drop_policy == "drop-all":
                return finish(math.inf, None)
            # relay policy: the spy passes it along without arming a timer
        else:
            armed.append(w)
            fires.append(t + rng.exponential(scale=timers.t_base))
            if not h.supports[w]:
                return finish(t, w)
            if routing.diffuser is not None:
                if routing.diffuser[w]:
                    return finish(t, w)
            elif q > 0.0 and rng.random() < q:
                return finish(t, w)
        if per_tx:
            if hop >= hop_cap:
                return finish(t, w)
            edge = h.indptr[w] + int(rng.integers(0, h.out_degree(w)))
        else:
            edge = int(routing.edge_next[edge])
            if edge < 0:
                return finish(t, w)
