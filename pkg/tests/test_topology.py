"""Graph family generators and role assignment."""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from stemfluff.topology import (Digraph, assign_roles, gen_line_cycle,
                                gen_exact_d_regular, gen_p2p_approx_regular,
                                gen_anonymity_approx4, embed_partial_deployment,
                                apply_supernode_edges, shortest_path_hops)


def test_digraph_rejects_self_loops():
    with pytest.raises(ValueError):
        Digraph.from_rows([[0], [0]])


def test_digraph_rejects_duplicate_edges():
    with pytest.raises(ValueError):
        Digraph.from_rows([[1, 1], [0]])


def test_digraph_rejects_out_of_range_targets():
    with pytest.raises(ValueError):
        Digraph.from_rows([[2], [0]])


def test_in_index_inverts_adjacency():
    rng = np.random.default_rng(3)
    g = gen_p2p_approx_regular(40, 5, rng)
    in_indptr, in_edges = g.in_index()
    # every edge appears exactly once, filed under its head node
    seen = np.sort(in_edges)
    assert np.array_equal(seen, np.arange(g.edge_count))
    for v in range(g.n):
        for e in in_edges[in_indptr[v]:in_indptr[v + 1]]:
            assert g.targets[e] == v


def test_undirected_closure_matches_brute_force():
    rng = np.random.default_rng(9)
    g = gen_p2p_approx_regular(30, 4, rng)
    adj = {v: set() for v in range(g.n)}
    for e in range(g.edge_count):
        u, w = int(g.tails[e]), int(g.targets[e])
        adj[u].add(w)
        adj[w].add(u)
    und_indptr, und_nbrs = g.undirected()
    for v in range(g.n):
        assert set(und_nbrs[und_indptr[v]:und_indptr[v + 1]].tolist()) == adj[v]


def test_exact_regular_degrees_split_evenly():
    rng = np.random.default_rng(1)
    for n, d in ((10, 2), (50, 4), (64, 6)):
        g = gen_exact_d_regular(n, d, rng)
        assert np.all(g.out_degrees == d // 2)
        in_deg = np.bincount(g.targets, minlength=n)
        assert np.all(in_deg == d // 2)


def test_exact_regular_rejects_odd_degree():
    with pytest.raises(ValueError):
        gen_exact_d_regular(10, 3, np.random.default_rng(0))


def test_line_cycle_is_one_cycle():
    rng = np.random.default_rng(4)
    g = gen_line_cycle(17, rng)
    assert np.all(g.out_degrees == 1)
    v, steps = 0, 0
    visited = set()
    while v not in visited:
        visited.add(v)
        v = int(g.targets[g.indptr[v]])
        steps += 1
    assert steps == 17 and len(visited) == 17


def test_approx_regular_gives_distinct_targets():
    rng = np.random.default_rng(5)
    g = gen_p2p_approx_regular(25, 6, rng)
    assert np.all(g.out_degrees == 6)
    for v in range(g.n):
        row = g.out_neighbors(v)
        assert len(set(row.tolist())) == 6
        assert v not in row


def test_approx4_is_two_picks():
    g = gen_anonymity_approx4(30, np.random.default_rng(6))
    assert np.all(g.out_degrees == 2)


def test_generators_deterministic_under_seed():
    a = gen_exact_d_regular(40, 4, np.random.default_rng(123))
    b = gen_exact_d_regular(40, 4, np.random.default_rng(123))
    assert a.same_structure(b)


def test_assign_roles_rounds_half_up():
    rng = np.random.default_rng(2)
    spy, supports = assign_roles(10, 0.25, 1.0, rng)
    assert spy.sum() == 3  # floor(2.5 + 0.5)
    assert supports.all()
    spy, supports = assign_roles(10, 0.2, 0.5, rng)
    assert spy.sum() == 2
    # spies always claim support; half of the 8 honest nodes do
    assert supports[spy].all()
    assert supports[~spy].sum() == 4


def test_embed_version_checking_prefers_supporters():
    rng = np.random.default_rng(11)
    for _ in range(20):
        spy, supports = assign_roles(60, 0.15, 0.4, rng)
        g = gen_p2p_approx_regular(60, 8, rng, spy=spy, supports=supports)
        h = embed_partial_deployment(g, 4, "version-checking", rng)
        for v in g.honest_nodes:
            nbrs = g.out_neighbors(v)
            picked = h.out_neighbors(v)
            assert set(picked.tolist()) <= set(nbrs.tolist())
            supp = nbrs[supports[nbrs]]
            if len(supp) >= 2:
                assert len(picked) == 2 and supports[picked].all()
            elif len(supp) == 1:
                assert set(picked.tolist()) == set(supp.tolist())
            else:
                assert len(picked) == 2


def test_embed_no_version_checking_ignores_support():
    rng = np.random.default_rng(12)
    spy, supports = assign_roles(60, 0.15, 0.2, rng)
    g = gen_p2p_approx_regular(60, 8, rng, spy=spy, supports=supports)
    h = embed_partial_deployment(g, 4, "no-version-checking", rng)
    for v in g.honest_nodes:
        picked = h.out_neighbors(v)
        assert len(picked) == 2
        assert set(picked.tolist()) <= set(g.out_neighbors(v).tolist())


def test_supernode_adds_single_listening_hub():
    rng = np.random.default_rng(13)
    spy, supports = assign_roles(40, 0.2, 1.0, rng)
    g = gen_p2p_approx_regular(40, 4, rng, spy=spy, supports=supports)
    s = apply_supernode_edges(g)
    hub = int(g.spy_nodes[0])
    expect = np.union1d(g.out_neighbors(hub), g.honest_nodes)
    assert np.array_equal(s.out_neighbors(hub), expect[expect != hub])
    for v in range(g.n):
        if v != hub:
            assert np.array_equal(s.out_neighbors(v), g.out_neighbors(v))


def test_supernode_without_spies_is_identity():
    g = gen_anonymity_approx4(20, np.random.default_rng(14))
    assert apply_supernode_edges(g) is g


def _bfs_hops(g, u, v):
    # reference implementation: plain frontier-by-frontier search
    if u == v:
        return 0
    frontier, dist, seen = [u], 0, {u}
    while frontier:
        dist += 1
        nxt = []
        for x in frontier:
            for w in g.out_neighbors(x):
                w = int(w)
                if w == v:
                    return dist
                if w not in seen:
                    seen.add(w)
                    nxt.append(w)
        frontier = nxt
    return None


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10_000))
def test_shortest_path_matches_reference_bfs(seed):
    rng = np.random.default_rng(seed)
    g = gen_p2p_approx_regular(15, 2, rng)
    pairs = rng.integers(0, 15, size=(6, 2))
    for u, v in pairs:
        assert shortest_path_hops(g, int(u), int(v)) == _bfs_hops(g, int(u), int(v))


@settings(max_examples=20, deadline=None)
@given(st.integers(4, 40), st.integers(0, 10_000))
def test_exact_regular_profile_holds_for_random_sizes(n, seed):
    g = gen_exact_d_regular(n, 4, np.random.default_rng(seed))
    assert np.all(g.out_degrees == 2)
    assert np.all(np.bincount(g.targets, minlength=n) == 2)
    # layer construction can't produce self-loops or duplicate edges
    keys = g.tails * n + g.targets
    assert len(np.unique(keys)) == g.edge_count
