from __future__ import annotations

from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from looseembed.embedder import (
    AbsorbingTuple,
    AbsorptionExhausted,
    CapacityError,
    ImmersionError,
    PipelineState,
    Star,
    absorbs,
    assign,
    complete_by_absorption,
    constrained_embedding,
    embed_spanning,
    extend_by_absorption,
    find_absorbers,
    immerse,
    immersion_host,
    oracle_embedding,
    rooted_tree,
    split_plans,
    vertex_orbits,
)
from looseembed.homomorphism import VertexMap, verify_map
from looseembed.hypercore import Hypergraph, complete_graph, random_graph, random_threshold_graph, two_clique_graph
from looseembed.loosetree import LooseTree, binary_tree, loose_path, random_tree

from oracles import spanning_embedding_oracle


# -- absorbing tuples --------------------------------------------------------------


def _hand_tuple():
    # target (1, 7, 8); stars centred at 9 and 11
    return AbsorbingTuple((1, 7, 8), (Star(9, ((4, 10),)), Star(11, ((6, 12),))))


def test_absorbs_definition():
    g = complete_graph(3, 13)
    tup = _hand_tuple()
    assert absorbs(g, tup.stars, tup.target)
    assert tup.base_edge == (1, 9, 11)
    without_base = Hypergraph(13, 3, [e for e in g.edges if e != (1, 9, 11)])
    assert not absorbs(without_base, tup.stars, tup.target)
    without_swap = Hypergraph(13, 3, [e for e in g.edges if e != (4, 7, 10)])
    assert not absorbs(without_swap, tup.stars, tup.target)
    overlapping = (Star(9, ((4, 10),)), Star(11, ((4, 12),)))
    assert not absorbs(g, overlapping, tup.target)


def test_find_absorbers_complete_graph_full_coverage():
    g = complete_graph(3, 30)
    family = find_absorbers(g, d=2, p=1)
    assert family.complete
    for tup in family.tuples:
        assert absorbs(g, tup.stars, tup.target)
        assert all(len(s.leaf_sets) == 2 for s in tup.stars)
    seen = set()
    for tup in family.tuples:
        assert seen.isdisjoint(tup.vertices)
        seen |= tup.vertices


def test_find_absorbers_without_room():
    g = complete_graph(3, 9)
    family = find_absorbers(g, forbidden=range(9), d=1, p=1)
    assert not family.tuples and not family.complete
    single = Hypergraph(6, 3, [(0, 1, 2)])
    family = find_absorbers(single, d=1, p=1)
    assert not family.tuples and len(family.uncovered) == len(family.counts)


def test_find_absorbers_explicit_targets_with_multiplicity():
    g = complete_graph(3, 20)
    targets = [(0, 1, 2), (3, 4, 5)]
    family = find_absorbers(g, forbidden=range(6), d=1, p=2, targets=targets)
    assert family.complete
    for t in targets:
        assert family.counts[t] >= 2 and family.shortfall(t) == 0
    assert all(tup.vertices.isdisjoint(range(6)) for tup in family.tuples)


# -- immersion -------------------------------------------------------------------------


def test_immerse_one_star():
    g = complete_graph(3, 20)
    tree = LooseTree(3, [(0, 1, 2), (1, 3, 4), (3, 5, 6), (0, 7, 8), (8, 9, 10), (10, 11, 12)], root=0)
    assert len(tree) == 13
    star = Star(15, ((16, 17), (18, 19)))
    found = immerse(g, tree, 0, [star])
    psi = found.vmap.assignment
    assert psi[0] == 0
    assert verify_map(tree, g, VertexMap(psi, "embedding"))
    host = found.hosts[0]
    assert tree.vertex_degree(host) == 2 and psi[host] == 15
    images = {tuple(sorted(psi[v] for v in e)) for e in tree.edges_at(host)}
    assert images == set(star.edges)
    assert immersion_host(tree, psi, star) is not None


def test_immerse_reports_blocking_star():
    g = complete_graph(3, 12)
    path = loose_path(3, 3)
    # the degree-2 vertices of a 3-edge path are adjacent, so two disjoint 2-stars never fit
    first = Star(5, ((1, 2), (6, 7)))
    assert immerse(g, path, 0, [first]).hosts[0] == 4
    with pytest.raises(ImmersionError) as info:
        immerse(g, path, 0, [first, Star(8, ((9, 10), (11, 3)))])
    assert info.value.star_index == 1


# -- assign ----------------------------------------------------------------------------


def test_assign_path_in_complete_four_graph():
    robust = complete_graph(4, 8)
    tree = loose_path(4, 33)
    assert len(tree) == 100
    result = assign(robust, None, tree, v1=0, m=25)
    audit = result.audit
    assert verify_map(tree, robust, result.phi)
    assert result.phi[tree.root] == 0
    assert audit.monotone and audit.fill_ok and audit.quota_ok
    assert audit.j[0] == 1
    for v, load in audit.loads.items():
        assert load <= (1 - Fraction(1, 20)) * 1 * 25


def test_assign_single_edge():
    robust = Hypergraph(3, 3, [(0, 1, 2)])
    tree = loose_path(3, 2)
    result = assign(robust, None, tree, v1=0, m=10)
    assert result.audit.ok and verify_map(tree, robust, result.phi)


def test_assign_reports_capacity_arithmetic():
    robust = Hypergraph(5, 3, [(0, 1, 2), (2, 3, 4)])
    with pytest.raises(CapacityError):
        assign(robust, None, loose_path(3, 4), v1=0, m=10)


@settings(max_examples=15, deadline=None)
@given(st.integers(min_value=0, max_value=10**6), st.integers(min_value=2, max_value=3))
def test_assign_audit_on_random_trees(seed, delta):
    robust = complete_graph(3, 7)
    tree = random_tree(3, 61, delta, seed)
    result = assign(robust, None, tree, v1=seed % 7, m=40)
    assert verify_map(tree, robust, result.phi)
    assert result.audit.monotone and result.audit.fill_ok and result.audit.quota_ok


# -- absorption ----------------------------------------------------------------------------


def _hand_state():
    g = complete_graph(3, 13)
    tree = LooseTree(3, [(0, 1, 2), (0, 3, 4), (0, 5, 6), (4, 9, 10), (6, 11, 12), (1, 7, 8)], root=0)
    embedded = [(0, 1, 2), (0, 3, 4), (0, 5, 6), (4, 9, 10), (6, 11, 12)]
    psi = {v: v for v in tree.vertices if v not in (7, 8)}
    state = PipelineState(g, tree, psi, embedded, [_hand_tuple()], {0: (9, 11)})
    state.check()
    return state


def test_one_edge_extension():
    state = _hand_state()
    new = extend_by_absorption(state, (1, 7, 8), leftover=(7, 8), tuple_index=0)
    assert verify_map(new.tree, new.graph, VertexMap(new.psi, "embedding"))
    assert len(new.psi) == len(state.psi) + 2
    assert new.psi[7] == 9 and new.psi[8] == 11
    assert new.psi[9] == 7 and new.psi[11] == 8
    assert new.consumed == {0}
    assert complete_by_absorption(new) is new


def test_spent_tuple_cannot_be_reused():
    state = _hand_state()
    state.consumed.add(0)
    with pytest.raises(AbsorptionExhausted):
        extend_by_absorption(state, (1, 7, 8), tuple_index=0)
    with pytest.raises(AbsorptionExhausted):
        complete_by_absorption(state)


def test_rooted_tree_orders_edges():
    t = rooted_tree(3, [(4, 5, 6), (0, 1, 2), (2, 3, 4)], root=0)
    assert t.top_down_edges()[0] == (0, 1, 2)


# -- spanning search -------------------------------------------------------------------------


def test_oracle_refutes_two_cliques():
    g = two_clique_graph(3, 13)
    tree = random_tree(3, 13, 2, 0)
    for mode in ("oracle", "pipeline"):
        result = embed_spanning(g, tree, mode)
        assert result.status == "failed"
        assert result.witness["reason"] == "disconnected"
        assert result.witness["components"] == [7, 6]


def test_size_mismatch_is_reported():
    result = oracle_embedding(complete_graph(3, 9), loose_path(3, 3))
    assert result.status == "failed" and result.witness["reason"] == "size"


def test_oracle_exhausts_small_negative():
    # a loose path on 7 vertices needs a vertex in two edges meeting only there
    g = Hypergraph(7, 3, [(0, 1, 2), (0, 3, 4), (0, 5, 6), (1, 3, 5)])
    tree = loose_path(3, 3)
    result = oracle_embedding(g, tree)
    assert not spanning_embedding_oracle(g.edges, 7, tree.edges, tree.vertices)
    assert result.status == "failed" and result.witness["reason"] == "exhausted"


def test_orbits_of_symmetric_graphs():
    assert vertex_orbits(complete_graph(3, 7)) == [list(range(7))]
    orbits = vertex_orbits(Hypergraph(6, 3, [(0, 1, 2), (0, 3, 4)]))
    assert [0] in orbits and [5] in orbits


def test_constrained_embedding_respects_pins():
    g = complete_graph(3, 9)
    tree = loose_path(3, 3)
    out = constrained_embedding(g, tree, fixed={0: 6, 2: 5}, forbidden=[0])
    assert out.assignment[0] == 6 and out.assignment[2] == 5
    assert 0 not in out.assignment.values()


def test_split_plans_on_binary_tree():
    tree = binary_tree(3, 2)
    plans = split_plans(tree, Fraction(3, 5))
    assert plans
    for plan in plans:
        assert len(plan.hosts) == 2
        assert plan.x not in plan.hosts


def test_pipeline_on_dense_graphs_matches_oracle():
    for seed in range(4):
        g = random_threshold_graph(3, 13, Fraction(85, 100), seed)
        tree = random_tree(3, 13, 2, 1000 + seed)
        result = embed_spanning(g, tree, "pipeline")
        assert result.success
        assert verify_map(tree, g, result.vmap)
        assert embed_spanning(g, tree, "oracle").success


@settings(max_examples=25, deadline=None)
@given(st.integers(min_value=0, max_value=10**6), st.sampled_from([0.3, 0.5, 0.7]))
def test_oracle_agrees_with_exhaustive_search(seed, density):
    g = random_graph(3, 7, density, seed)
    tree = random_tree(3, 7, 3, seed)
    result = oracle_embedding(g, tree)
    expected = spanning_embedding_oracle(g.edges, 7, tree.edges, tree.vertices)
    assert result.success == expected
    if result.success:
        assert verify_map(tree, g, result.vmap)
