"""Vectorized stem-walk kernels for large experiment batches.

The reference walk lives in :func:`stemfluff.protocol.stem_route`; these
kernels advance many walks in lockstep over flat CSR arrays and exist purely
for throughput (millions of walks per trial in the larger sweeps).  They
implement the same semantics for the cases they cover:

* memoryless (per-transaction) forwarding, any q, all nodes supporting;
* deterministic epoch forwarding at q == 0, where the walk consumes no
  randomness at all, so results are bit-identical to the reference walk.

For deterministic one-to-one routing the global edge map is injective, which
means a walk's first repeated (node, inbound-edge) pair can only be its start
edge; the kernel exploits that for O(1) loop detection and falls back to an
exact per-walk revisit scan for anything still alive after the vectorized
stretch (relevant to non-injective schemes).

Termination codes: 0 = spy hit, 1 = entered fluff (coin), 2 = hop cap,
3 = routing loop.
"""

from __future__ import annotations

import numpy as np

SPY_HIT = 0
FLUFF = 1
HOP_CAP = 2
LOOP = 3


def oto_routing_2out(indptr, in_indptr, in_edges, rng):
    """One-to-one edge map for graphs with exactly two in/out edges per node.

    Each node independently pairs its two inbound edges with its two outbound
    slots, uniformly over the two possible bijections — the same distribution
    the generic per-node sampler produces, just without the Python loop.
    """
    n = len(indptr) - 1
    if not (np.all(np.diff(indptr) == 2) and np.all(np.diff(in_indptr) == 2)):
        raise ValueError("fast one-to-one sampler needs in/out degree exactly 2")
    first_out = indptr[:-1]
    flip = rng.integers(0, 2, size=n)
    edge_next = np.empty(2 * n, dtype=np.int64)
    edge_next[in_edges[in_indptr[:-1]]] = first_out + flip
    edge_next[in_edges[in_indptr[:-1] + 1]] = first_out + (1 - flip)
    return edge_next


def walk_memoryless(indptr, targets, spy, sources, q, rng, hop_cap):
    """Batch per-transaction stem walks; every node assumed to support relaying.

    Returns ``(term, spy_node, deliverer, fluff_at, hops)`` arrays aligned with
    ``sources``.
    """
    degs = np.diff(indptr)
    m = len(sources)
    term = np.full(m, -1, dtype=np.int8)
    spy_node = np.full(m, -1, dtype=np.int64)
    deliverer = np.full(m, -1, dtype=np.int64)
    fluff_at = np.full(m, -1, dtype=np.int64)
    hops = np.zeros(m, dtype=np.int64)

    active = np.arange(m, dtype=np.int64)
    holder = np.asarray(sources, dtype=np.int64).copy()
    hop = 0
    while active.size:
        hop += 1
        h = holder[active]
        slots = indptr[h] + (rng.random(active.size) * degs[h]).astype(np.int64)
        w = targets[slots]

        hit = spy[w]
        if np.any(hit):
            idx = active[hit]
            term[idx] = SPY_HIT
            spy_node[idx] = w[hit]
            deliverer[idx] = h[hit]
            hops[idx] = hop
        live = ~hit
        idx = active[live]
        w = w[live]
        holder[idx] = w

        if q > 0.0 and idx.size:
            fluffed = rng.random(idx.size) < q
            stop = idx[fluffed]
            term[stop] = FLUFF
            fluff_at[stop] = w[fluffed]
            hops[stop] = hop
            idx = idx[~fluffed]
        if hop >= hop_cap and idx.size:
            term[idx] = HOP_CAP
            fluff_at[idx] = holder[idx]
            hops[idx] = hop
            idx = idx[:0]
        active = idx
    return term, spy_node, deliverer, fluff_at, hops


def walk_deterministic_q0(targets, tails, spy, edge_next, start_edges,
                          vector_steps=256):
    """Batch deterministic walks at q == 0 (no randomness consumed).

    Loop rule: a walk entering its start edge again has revisited a
    (node, inbound-edge) pair and fluffs at that edge's head.  Walks still
    alive after ``vector_steps`` are finished one at a time with a full
    visited-edge scan, which also catches loops not through the start edge
    (possible under non-injective schemes).
    """
    start_edges = np.asarray(start_edges, dtype=np.int64)
    m = len(start_edges)
    term = np.full(m, -1, dtype=np.int8)
    spy_node = np.full(m, -1, dtype=np.int64)
    deliverer = np.full(m, -1, dtype=np.int64)
    fluff_at = np.full(m, -1, dtype=np.int64)
    hops = np.zeros(m, dtype=np.int64)

    active = np.arange(m, dtype=np.int64)
    cur = start_edges.copy()
    hop = 0
    while active.size and hop < vector_steps:
        hop += 1
        e = cur[active]
        w = targets[e]
        hit = spy[w]
        if np.any(hit):
            idx = active[hit]
            term[idx] = SPY_HIT
            spy_node[idx] = w[hit]
            deliverer[idx] = tails[e[hit]]
            hops[idx] = hop
        live = ~hit
        idx = active[live]
        nxt = edge_next[e[live]]
        looped = nxt == start_edges[idx]
        if np.any(looped):
            stop = idx[looped]
            term[stop] = LOOP
            fluff_at[stop] = targets[start_edges[stop]]
            hops[stop] = hop + 1
        cur[idx] = nxt
        active = idx[~looped]

    for i in active:  # rare stragglers: exact revisit scan from scratch
        e = int(start_edges[i])
        seen = set()
        h = 0
        while True:
            h += 1
            w = int(targets[e])
            if spy[w]:
                term[i], spy_node[i], deliverer[i], hops[i] = SPY_HIT, w, int(tails[e]), h
                break
            if e in seen:
                term[i], fluff_at[i], hops[i] = LOOP, w, h
                break
            seen.add(e)
            e = int(edge_next[e])
    return term, spy_node, deliverer, fluff_at, hops


def first_spy_counts(accused, truth_sources, honest_mask):
    """Per-node correct/total accusation counts for a batch of mapped txs.

    ``accused[i]`` is the node charged with transaction i, ``truth_sources[i]``
    its true origin; entries with ``accused < 0`` (unmapped) are skipped.
    Returns ``(correct, mapped)`` arrays over all nodes.
    """
    n = len(honest_mask)
    ok = accused >= 0
    acc = accused[ok]
    correct = np.bincount(acc[acc == truth_sources[ok]], minlength=n)
    mapped = np.bincount(acc, minlength=n)
    return correct, mapped
