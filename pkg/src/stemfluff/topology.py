"""Directed peer-to-peer graph construction for stem/fluff broadcast simulations.

Graphs are stored in compressed sparse row form (``indptr``/``targets``) because
every hot loop in the simulator wants flat integer arrays rather than adjacency
dicts.  All generators draw from a caller-supplied :class:`numpy.random.Generator`
so that experiment runs are reproducible from a single integer seed.

Two layers of graph show up throughout: the underlying peer-to-peer connectivity
used for the diffusion (fluff) phase, and the sparser anonymity relay graph used
for the stem phase.  Both are plain :class:`Digraph` instances; the embedding
helpers below derive the second from the first.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "Digraph",
    "NodeProfile",
    "assign_roles",
    "gen_p2p_approx_regular",
    "gen_exact_d_regular",
    "gen_anonymity_approx4",
    "gen_line_cycle",
    "embed_partial_deployment",
    "apply_supernode_edges",
    "shortest_path_hops",
]


@dataclass(frozen=True)
class NodeProfile:
    """Role information for a single node."""

    node: int
    is_spy: bool
    supports: bool


class Digraph:
    """A simple directed graph over nodes ``0..n-1`` with per-node roles.

    ``indptr`` has length ``n + 1`` and ``targets[indptr[v]:indptr[v+1]]`` are the
    out-neighbors of ``v`` (order is meaningful: edge slot ids are CSR positions).
    ``spy`` marks adversarial nodes; ``supports`` marks nodes running the relay
    protocol (non-supporters immediately diffuse anything they receive).
    """

    def __init__(self, indptr, targets, spy=None, supports=None, validate=True):
        self.indptr = np.asarray(indptr, dtype=np.int64)
        self.targets = np.asarray(targets, dtype=np.int64)
        self.n = len(self.indptr) - 1
        if spy is None:
            spy = np.zeros(self.n, dtype=bool)
        if supports is None:
            supports = np.ones(self.n, dtype=bool)
        self.spy = np.asarray(spy, dtype=bool)
        self.supports = np.asarray(supports, dtype=bool)
        if validate:
            self._validate()
        # lazily built caches
        self._tails = None
        self._in_index = None
        self._und = None

    # ------------------------------------------------------------------
    # construction helpers

    @classmethod
    def from_rows(cls, rows, spy=None, supports=None):
        """Build from a list of per-node target sequences."""
        indptr = np.zeros(len(rows) + 1, dtype=np.int64)
        for v, row in enumerate(rows):
            indptr[v + 1] = indptr[v] + len(row)
        targets = np.concatenate([np.asarray(r, dtype=np.int64) for r in rows]) \
            if indptr[-1] else np.zeros(0, dtype=np.int64)
        return cls(indptr, targets, spy=spy, supports=supports)

    def _validate(self):
        if self.n < 1:
            raise ValueError("graph needs at least one node")
        if self.spy.shape != (self.n,) or self.supports.shape != (self.n,):
            raise ValueError("role arrays must have one entry per node")
        if len(self.targets) != self.indptr[-1]:
            raise ValueError("indptr/targets length mismatch")
        if len(self.targets) and (self.targets.min() < 0 or self.targets.max() >= self.n):
            raise ValueError("edge target out of range")
        for v in range(self.n):
            row = self.targets[self.indptr[v]:self.indptr[v + 1]]
            if np.any(row == v):
                raise ValueError(f"self-loop at node {v}")
            if len(np.unique(row)) != len(row):
                raise ValueError(f"duplicate out-edge at node {v}")

    # ------------------------------------------------------------------
    # basic accessors

    @property
    def edge_count(self) -> int:
        return int(self.indptr[-1])

    def out_neighbors(self, v: int) -> np.ndarray:
        return self.targets[self.indptr[v]:self.indptr[v + 1]]

    def out_degree(self, v: int) -> int:
        return int(self.indptr[v + 1] - self.indptr[v])

    @property
    def out_degrees(self) -> np.ndarray:
        return np.diff(self.indptr)

    def profile(self, v: int) -> NodeProfile:
        return NodeProfile(v, bool(self.spy[v]), bool(self.supports[v]))

    @property
    def honest_nodes(self) -> np.ndarray:
        return np.flatnonzero(~self.spy)

    @property
    def spy_nodes(self) -> np.ndarray:
        return np.flatnonzero(self.spy)

    @property
    def tails(self) -> np.ndarray:
        """Source node of each edge slot (parallel to ``targets``)."""
        if self._tails is None:
            self._tails = np.repeat(
                np.arange(self.n, dtype=np.int64), np.diff(self.indptr)
            )
        return self._tails

    # ------------------------------------------------------------------
    # derived structure

    def in_index(self):
        """Edges grouped by head node: ``(in_indptr, edge_ids)``.

        ``edge_ids[in_indptr[v]:in_indptr[v+1]]`` are the slot ids of edges
        pointing *into* ``v``, in ascending slot order (stable sort keeps this
        deterministic, which the routing samplers rely on).
        """
        if self._in_index is None:
            order = np.argsort(self.targets, kind="stable")
            counts = np.bincount(self.targets, minlength=self.n)
            in_indptr = np.zeros(self.n + 1, dtype=np.int64)
            np.cumsum(counts, out=in_indptr[1:])
            self._in_index = (in_indptr, order.astype(np.int64))
        return self._in_index

    def in_degree(self, v: int) -> int:
        in_indptr, _ = self.in_index()
        return int(in_indptr[v + 1] - in_indptr[v])

    def undirected(self):
        """Union of out- and in-neighbors per node, deduplicated.

        Diffusion spreads along every link a node is aware of regardless of
        direction, so the fluff phase runs on this closure.
        """
        if self._und is None:
            heads = np.concatenate([self.targets, self.tails])
            srcs = np.concatenate([self.tails, self.targets])
            # dedupe (src, head) pairs
            key = srcs * self.n + heads
            uniq = np.unique(key)
            u_src = uniq // self.n
            u_head = uniq % self.n
            counts = np.bincount(u_src, minlength=self.n)
            und_indptr = np.zeros(self.n + 1, dtype=np.int64)
            np.cumsum(counts, out=und_indptr[1:])
            self._und = (und_indptr, u_head.astype(np.int64))
        return self._und

    def same_structure(self, other: "Digraph") -> bool:
        return (
            self.n == other.n
            and np.array_equal(self.indptr, other.indptr)
            and np.array_equal(self.targets, other.targets)
            and np.array_equal(self.spy, other.spy)
            and np.array_equal(self.supports, other.supports)
        )


# ----------------------------------------------------------------------
# role assignment


def _round_half_up(x: float) -> int:
    return int(np.floor(x + 0.5))


def assign_roles(n, spy_fraction, support_fraction=1.0, rng=None):
    """Pick spy and protocol-supporter masks.

    ``round(spy_fraction * n)`` nodes (ties rounded up) become spies, chosen
    uniformly.  Spies always claim to support the relay protocol; among the
    honest nodes, ``round(support_fraction * honest_count)`` supporters are
    chosen uniformly.  Returns ``(spy_mask, support_mask)``.
    """
    if rng is None:
        raise ValueError("assign_roles requires an explicit rng")
    if not 0.0 <= spy_fraction < 1.0:
        raise ValueError("spy_fraction must be in [0, 1)")
    if not 0.0 <= support_fraction <= 1.0:
        raise ValueError("support_fraction must be in [0, 1]")
    n_spies = _round_half_up(spy_fraction * n)
    spy = np.zeros(n, dtype=bool)
    if n_spies:
        spy[rng.choice(n, size=n_spies, replace=False)] = True
    honest = np.flatnonzero(~spy)
    supports = np.zeros(n, dtype=bool)
    supports[spy] = True  # the adversary runs (claims to run) the new protocol
    n_sup = _round_half_up(support_fraction * len(honest))
    if n_sup:
        supports[rng.choice(honest, size=n_sup, replace=False)] = True
    return spy, supports


# ----------------------------------------------------------------------
# generators


def _distinct_targets(n, v, k, rng):
    """k distinct uniform picks from {0..n-1} \\ {v}."""
    pick = rng.choice(n - 1, size=k, replace=False)
    pick[pick >= v] += 1
    return pick


def gen_p2p_approx_regular(n, eta, rng, spy=None, supports=None):
    """Connectivity graph where each node opens ``eta`` outbound links.

    Every node independently selects ``eta`` distinct targets uniformly at
    random (never itself), giving out-degree exactly ``eta`` and total degree
    approximately ``2 * eta``.
    """
    if not 1 <= eta <= n - 1:
        raise ValueError("eta must be in [1, n-1]")
    targets = np.empty(n * eta, dtype=np.int64)
    for v in range(n):
        targets[v * eta:(v + 1) * eta] = _distinct_targets(n, v, eta, rng)
    indptr = np.arange(0, n * eta + 1, eta, dtype=np.int64)
    return Digraph(indptr, targets, spy=spy, supports=supports, validate=False)


def _cyclic_permutation(n, rng):
    """Out-map of a uniform random directed Hamiltonian cycle on n nodes."""
    order = rng.permutation(n)
    nxt = np.empty(n, dtype=np.int64)
    nxt[order] = np.roll(order, -1)
    return nxt


def gen_exact_d_regular(n, d, rng, spy=None, supports=None, max_tries=200):
    """Exactly d-regular digraph built from d/2 superposed random cycles.

    Each of the ``d/2`` layers is a uniform random directed Hamiltonian cycle
    (a cyclic permutation, so no self-loops by construction); a layer that
    would duplicate an existing edge is redrawn.  Every node ends up with
    out-degree d/2 and in-degree d/2, i.e. total degree exactly ``d``.
    """
    if d < 2 or d % 2:
        raise ValueError("d must be a positive even integer")
    if d // 2 > max(n - 1, 0):
        raise ValueError("d too large for n nodes")
    layers = []
    for _ in range(d // 2):
        for attempt in range(max_tries):
            nxt = _cyclic_permutation(n, rng)
            if all(not np.any(nxt == prev) for prev in layers):
                layers.append(nxt)
                break
        else:
            raise ValueError("could not superpose distinct cycles (n too small for d)")
    rows = np.stack(layers, axis=1)  # (n, d/2) out-targets per node
    indptr = np.arange(0, n * (d // 2) + 1, d // 2, dtype=np.int64)
    return Digraph(indptr, rows.reshape(-1), spy=spy, supports=supports, validate=False)


def gen_anonymity_approx4(n, rng, spy=None, supports=None):
    """Anonymity relay graph where each node picks two distinct targets.

    Both picks are uniform over the other nodes (the second excludes the
    first), so out-degree is exactly 2 and expected total degree is 4.
    """
    return gen_p2p_approx_regular(n, 2, rng, spy=spy, supports=supports)


def gen_line_cycle(n, rng, spy=None, supports=None):
    """Baseline relay graph: one directed Hamiltonian cycle (out-degree 1)."""
    if n < 2:
        raise ValueError("cycle needs at least two nodes")
    nxt = _cyclic_permutation(n, rng)
    indptr = np.arange(n + 1, dtype=np.int64)
    return Digraph(indptr, nxt, spy=spy, supports=supports, validate=False)


def embed_partial_deployment(g, d, mode, rng):
    """Derive a relay graph from connectivity ``g`` under partial deployment.

    mode "version-checking": a node that can see supporter neighbors relays
    only to them — ``d/2`` distinct picks among them, or all of them when
    fewer than ``d/2`` exist; a node with no supporter neighbors falls back to
    ``d/2`` uniform picks from all its connectivity neighbors.

    mode "no-version-checking": ``d/2`` uniform distinct picks from the node's
    connectivity neighbors regardless of support status (the stem then simply
    dies at the first non-supporter it reaches).

    Roles carry over unchanged; every selected edge exists in ``g``.
    """
    if d < 2 or d % 2:
        raise ValueError("d must be a positive even integer")
    if mode not in ("version-checking", "no-version-checking"):
        raise ValueError(f"unknown deployment mode: {mode!r}")
    half = d // 2
    rows = []
    for v in range(g.n):
        neigh = g.out_neighbors(v)
        if len(neigh) < half:
            raise ValueError(f"node {v} has fewer than d/2 connectivity neighbors")
        if mode == "version-checking":
            supp = neigh[g.supports[neigh]]
            if len(supp) >= half:
                row = rng.choice(supp, size=half, replace=False)
            elif len(supp) > 0:
                row = supp.copy()
            else:
                row = rng.choice(neigh, size=half, replace=False)
        else:
            row = rng.choice(neigh, size=half, replace=False)
        rows.append(row)
    return Digraph.from_rows(rows, spy=g.spy, supports=g.supports)


def apply_supernode_edges(g):
    """Give the colluding adversary a listening supernode.

    The lowest-indexed spy gains an edge to every honest node on top of its
    existing links, so in the gossip phase every honest node has exactly one
    extra adversarial connection; all other rows are untouched.  The spies
    pool observations anyway, so one shared endpoint models "the adversary is
    connected to everyone" without multiplying its per-node link count by the
    spy population.  Graphs without spies are returned unchanged.
    """
    spies = g.spy_nodes
    if not len(spies):
        return g
    hub = int(spies[0])
    rows = [g.out_neighbors(v) for v in range(g.n)]
    merged = np.union1d(rows[hub], np.flatnonzero(~g.spy))
    rows[hub] = merged[merged != hub]
    return Digraph.from_rows(rows, spy=g.spy, supports=g.supports)


def shortest_path_hops(g, u, v):
    """Directed BFS hop count from u to v, or ``None`` when unreachable."""
    if u == v:
        return 0
    seen = np.zeros(g.n, dtype=bool)
    seen[u] = True
    frontier = [u]
    hops = 0
    while frontier:
        hops += 1
        nxt = []
        for w in frontier:
            for t in g.out_neighbors(w):
                if t == v:
                    return hops
                if not seen[t]:
                    seen[t] = True
                    nxt.append(int(t))
        frontier = nxt
    return None
