from __future__ import annotations

from fractions import Fraction
from itertools import combinations

from hypothesis import given, settings
from hypothesis import strategies as st

from looseembed.homomorphism import INFINITY
from looseembed.hypercore import Hypergraph, complete_graph, link, parity_graph, random_graph, two_clique_graph
from looseembed.matching import components
from looseembed.robustgraph import (
    EdgeReach,
    analyse_colouring,
    build_enumeration,
    build_gstar,
    build_labels,
    build_rotatability,
    certify_robust,
    check_enumeration,
    check_matching_property,
    condensation_order,
    count_extreme_weightings,
    extreme_weightings,
    link_containment,
    many_mon,
)

from strategies import hypergraphs


def test_two_cliques_keep_every_edge():
    g = two_clique_graph(4, 12)
    robust = build_gstar(g)
    assert robust.gstar == g
    for e, sources in robust.provenance.items():
        side = {v < 6 for v in e}
        assert len(side) == 1
        assert all({v < 6 for v in a} == side for a in sources)


def test_only_the_largest_link_component_is_kept():
    big = [(0, 1) + p for p in combinations(range(2, 7), 2)]
    small = [(0, 1) + p for p in combinations(range(7, 10), 2)]
    g = Hypergraph(10, 4, big + small)
    robust = build_gstar(g)
    kept = {v for e in robust.components[(0, 1)].edges for v in e}
    assert kept == set(range(2, 7))
    for e in small:
        assert (0, 1) not in robust.provenance.get(e, ())
    assert not robust.ties or (0, 1) not in robust.ties


def test_link_containment_on_complete_graph():
    g = complete_graph(4, 7)
    robust = build_gstar(g)
    for b in [(), (0,), (0, 1)]:
        assert link_containment(g, b, robust) == []


def test_labels_on_complete_four_graph():
    g = complete_graph(4, 7)
    robust = build_gstar(g)
    labels = build_labels(g, robust)
    for a in labels.family:
        expected = link(g, a).edges if a else None
        if expected is not None:
            assert labels.K(a).edges == expected
        assert labels.minus(a) == frozenset()


def test_single_edge_labels():
    g = Hypergraph(6, 4, [(0, 1, 2, 3)])
    labels = build_labels(g)
    for a in labels.family:
        if set(a) <= {0, 1, 2, 3}:
            assert labels.plus(a) == {(0, 1, 2, 3)}


def test_colouring_examples():
    mono = {p: 1 for p in combinations(range(6), 2)}
    analysis = analyse_colouring(6, mono)
    assert analysis.gallai and analysis.locally_two and analysis.spanning

    split = {}
    for a, b in combinations(range(8), 2):
        split[(a, b)] = 2 if (a < 4) == (b < 4) else 1
    analysis = analyse_colouring(8, split)
    assert analysis.gallai and analysis.locally_two
    assert analysis.spanning

    rainbow = analyse_colouring(3, {(0, 1): 1, (0, 2): 2, (1, 2): 3})
    assert not rainbow.gallai
    assert rainbow.rainbow == [(0, 1, 2)]


def test_enumeration_complete_and_split():
    g = complete_graph(3, 7)
    robust = build_gstar(g)
    result = build_enumeration(build_labels(g, robust), robust)
    assert result.valid and result.label_order_valid

    split = two_clique_graph(3, 10)
    robust = build_gstar(split)
    result = build_enumeration(build_labels(split, robust), robust)
    assert not result.valid
    e, f = result.witness
    reach = EdgeReach(robust.gstar)
    assert not reach.reaches(e, f)


def test_tight_component_order_verifies():
    g = complete_graph(4, 7)
    reach = EdgeReach(g)
    ok, witness = check_enumeration(g.sorted_edges(), reach)
    assert ok and witness is None


def test_rotation_report_on_complete_four_graph():
    report = build_rotatability(complete_graph(4, 7))
    assert report.all_rotatable and report.consistent
    assert report.radius <= 10


def test_single_edge_is_not_rotatable():
    report = build_rotatability(Hypergraph(5, 3, [(0, 1, 2)]))
    assert not report.all_rotatable
    assert report.edges[0].radius == INFINITY


def test_many_mon_on_dense_graph():
    g = complete_graph(4, 8)
    alpha = Fraction(1, 10)
    w, count = many_mon(g, 0)
    assert w is not None and count >= (Fraction(1, 2) - 2 * alpha) * g.n


def test_certify_examples():
    assert certify_robust(complete_graph(3, 7), Fraction(1, 10)).status == "certified"
    refuted = certify_robust(two_clique_graph(3, 10), Fraction(1, 10))
    assert refuted.status == "refuted" and "R2" in refuted.witness
    parity = certify_robust(parity_graph(4, 4, 4, mixed=False), Fraction(1, 10))
    assert parity.status == "refuted" and "R2" in parity.witness


def test_extreme_weighting_count():
    g = complete_graph(3, 6)
    for eta in (Fraction(1, 10), Fraction(1, 3), Fraction(1, 2)):
        points = list(extreme_weightings(g, eta))
        assert len(points) == count_extreme_weightings(g, eta)
        for omega in points:
            assert sum(omega.values()) >= (1 - eta) * g.n
            assert all(0 <= w <= 1 for w in omega.values())


def test_matching_property_fails_on_two_overlapping_edges():
    g = Hypergraph(5, 3, [(0, 1, 2), (2, 3, 4)])
    evidence = check_matching_property(g, Fraction(1, 10), samples=5)
    assert not evidence.holds


@settings(max_examples=30, deadline=None)
@given(hypergraphs(k_values=(3, 4), max_n=7, min_n=5))
def test_gstar_keeps_largest_link_components(g):
    robust = build_gstar(g)
    assert robust.gstar.edges <= g.edges
    for a, core in robust.components.items():
        lk = link(g, a) if a else g
        sizes = [len(c) for c in components(lk)]
        kept = {v for e in core.edges for v in e}
        assert len(kept) == max(sizes)
        for uv in core.edges:
            assert tuple(sorted(a + uv)) in robust.gstar.edges


def _greedy_order_exists(edges, reaches):
    """Exact: some valid order exists iff repeatedly removing an edge that
    reaches all remaining edges empties the list."""
    left = list(edges)
    while left:
        head = next((e for e in left if all(reaches(e, f) for f in left)), None)
        if head is None:
            return False
        left.remove(head)
    return True


@settings(max_examples=30, deadline=None)
@given(st.integers(min_value=0, max_value=10**6), st.sampled_from([0.3, 0.5, 0.8]))
def test_condensation_order_is_valid_exactly_when_one_exists(seed, density):
    g = random_graph(3, 7, density, seed)
    if not g.edges:
        return
    reach = EdgeReach(g)
    ok, _ = check_enumeration(condensation_order(reach), reach)
    assert ok == _greedy_order_exists(g.sorted_edges(), reach.reaches)
