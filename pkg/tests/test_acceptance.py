"""Acceptance criteria, one test per criterion.

Each test prints a PASS/FAIL line through the ``criterion`` fixture; the lines
are repeated in the pytest terminal summary.
"""
from __future__ import annotations

import random
import time
from collections import Counter
from fractions import Fraction
from itertools import combinations
from math import comb, factorial

from looseembed.embedder import assign, embed_spanning
from looseembed.homomorphism import (
    INFINITY,
    RotationSolver,
    chain_shape,
    compose_rotations,
    generator_closure,
    oracle_equivalence,
    reachability,
    rotatability,
    shape_to_tree,
    verify_map,
)
from looseembed.hypercore import (
    Hypergraph,
    complete_graph,
    link,
    min_degree,
    parity_graph,
    random_graph,
    random_threshold_graph,
    shadow_sets,
    tight_components,
    two_clique_graph,
)
from looseembed.loosetree import binary_tree, loose_path, random_tree
from looseembed.matching import (
    components,
    max_fractional_matching,
    perfect_size,
    structure_checks,
    uniform_weighting,
)
from looseembed.perms import all_perms, compose, parse_perm
from looseembed.robustgraph import EdgeReach, build_gstar, certify_robust

from oracles import (
    homomorphism_root_images,
    link_oracle,
    perfect_matching_oracle,
    shadow_oracle,
    spanning_embedding_oracle,
    tight_components_oracle,
)


def _random_hypergraph(rng: random.Random, k: int, n: int) -> Hypergraph:
    total = comb(n, k)
    p = min(0.6, rng.uniform(10, 120) / total)
    return Hypergraph(n, k, (e for e in combinations(range(n), k) if rng.random() < p))


def test_criterion_1_structural_exactness(criterion):
    rng = random.Random(2024)
    graphs = []
    for i in range(120):
        k = (3, 4, 5)[i % 3]
        graphs.append(_random_hypergraph(rng, k, rng.randint(k + 1, 14)))
    package_time = 0.0
    mismatches = []
    for g in graphs:
        subsets = [s for size in range(1, g.k) for s in combinations(range(g.n), size)]
        subsets = rng.sample(subsets, min(40, len(subsets)))
        clock = time.perf_counter()
        shadows = [shadow_sets(g, j) for j in range(g.k + 1)]
        links = [link(g, s).edges for s in subsets]
        comps = {frozenset(c) for c in tight_components(g)}
        package_time += time.perf_counter() - clock
        if shadows != [shadow_oracle(g.edges, j) for j in range(g.k + 1)]:
            mismatches.append(("shadow", g.k, g.n))
        if links != [link_oracle(g.edges, s) for s in subsets]:
            mismatches.append(("link", g.k, g.n))
        if comps != tight_components_oracle(g.edges, g.k):
            mismatches.append(("components", g.k, g.n))
    ok = not mismatches and package_time < 10
    criterion(1, ok, f"{len(graphs)} hypergraphs, {len(mismatches)} mismatches, package time {package_time:.2f}s")


def test_criterion_2_loose_tree_arithmetic(criterion):
    trees = [binary_tree(k, r) for k in (2, 3, 4) for r in (1, 2, 3)]
    trees += [loose_path(k, m) for k in (2, 3, 5) for m in (1, 4, 9)]
    trees += [random_tree(k, 1 + (k - 1) * m, d, s)
              for s in range(30) for k in (3, 4) for m in (3, 8) for d in (2, 3)]
    counting = all(
        len(t) % (t.k - 1) == 1 % (t.k - 1) and len(t.edges) == (len(t) - 1) // (t.k - 1) for t in trees
    )
    t32 = binary_tree(3, 2)
    shape = (len(t32), len(t32.edges), t32.max_degree())
    pm = perfect_matching_oracle(t32.edges, t32.vertices)
    pm_ok = pm is not None and len(pm) == 5 and sorted(v for e in pm for v in e) == sorted(t32.vertices)
    ok = counting and shape == (15, 7, 2) and pm_ok
    criterion(2, ok, f"{len(trees)} trees counted, T(3,2) has |V|,|E|,max degree = {shape}, "
                     f"perfect matching of {0 if pm is None else len(pm)} edges")


def _chain_images(g: Hypergraph, target, radius: int):
    tree = shape_to_tree(g.k, chain_shape(g.k, 3))
    return homomorphism_root_images(
        g.edges, g.n, tree.edges, tree.root, lambda v: set(target) if tree.depth[v] > radius else None
    )


def test_criterion_3_oracle_equivalence_gate(criterion):
    instances = [
        (parity_graph(4, 4, 4, mixed=False), (4, 5, 6, 7)),
        (parity_graph(4, 4, 4), (0, 1, 4, 5)),
        (parity_graph(4, 3, 4), (0, 1, 3, 4)),
        (complete_graph(3, 5), (0, 1, 2)),
        (complete_graph(4, 6), (0, 1, 2, 3)),
        (two_clique_graph(3, 8), (0, 1, 2)),
        (Hypergraph(5, 3, [(0, 1, 2)]), (0, 1, 2)),
        (Hypergraph(6, 3, [(0, 1, 2), (1, 2, 3), (2, 3, 4), (3, 4, 5)]), (0, 1, 2)),
    ]
    rng = random.Random(7)
    while len(instances) < 34:
        k = rng.choice((3, 3, 4))
        g = random_graph(k, rng.randint(k + 1, 7 if k == 3 else 6), rng.choice((0.4, 0.6, 0.8)), rng.randrange(10**6))
        if g.edges:
            instances.append((g, g.sorted_edges()[rng.randrange(len(g.edges))]))
    disagreements = 0
    trees = 0
    chain_mismatches = 0
    for g, edge in instances:
        verdict = oracle_equivalence(g, edge, depth_cap=3, branch_cap=2)
        disagreements += len(verdict.disagreements)
        trees += verdict.trees_checked
        # second route: the chain of depth 3 checked by the test-side search
        reach = reachability(g, edge)
        for radius in (-1, 0, 1, 2):
            if _chain_images(g, edge, radius) != set(reach.level(radius)):
                chain_mismatches += 1
    parity = reachability(parity_graph(4, 4, 4, mixed=False), (4, 5, 6, 7))
    obstruction = all(parity.radii[v] == INFINITY for v in range(4))
    ok = disagreements == 0 and chain_mismatches == 0 and obstruction and len(instances) >= 30
    criterion(3, ok, f"{len(instances)} instances, {trees} explicit trees, {disagreements} disagreements, "
                     f"{chain_mismatches} chain mismatches, parity part unreachable: {obstruction}")


def _certified(g: Hypergraph, omega, result) -> bool:
    y = result.dual
    primal = sum(result.weights.values(), Fraction(0))
    dual = sum((omega[v] * y.get(v, Fraction(0)) for v in range(g.n)), Fraction(0))
    feasible = all(
        sum((x for e, x in result.weights.items() if v in e), Fraction(0)) <= omega[v] for v in range(g.n)
    ) and all(x >= 0 for x in result.weights.values())
    covering = all(sum(y.get(v, Fraction(0)) for v in e) >= 1 for e in g.edges)
    return feasible and covering and all(w >= 0 for w in y.values()) and primal == dual == result.size


def test_criterion_4_lp_correctness(criterion):
    rng = random.Random(11)
    solves = 0
    uncertified = 0
    for _ in range(60):
        k = rng.choice((2, 3, 4))
        g = random_graph(k, rng.randint(k, 8), rng.choice((0.2, 0.5, 0.8)), rng.randrange(10**6))
        omega = {v: Fraction(rng.randint(0, 4), 4) for v in range(g.n)}
        solves += 1
        uncertified += not _certified(g, omega, max_fractional_matching(g, omega))
    two = Hypergraph(5, 3, [(0, 1, 2), (2, 3, 4)])
    omega5 = uniform_weighting(5)
    r_two = max_fractional_matching(two, omega5)
    k6 = complete_graph(3, 6)
    omega6 = uniform_weighting(6)
    r_k6 = max_fractional_matching(k6, omega6)
    for g, omega, r in ((two, omega5, r_two), (k6, omega6, r_k6)):
        solves += 1
        uncertified += not _certified(g, omega, r)
    fixtures = (
        r_two.size == 1 and perfect_size(two, omega5) == Fraction(5, 3)
        and r_k6.size == 2 and perfect_size(k6, omega6) == 2
    )
    ok = uncertified == 0 and fixtures
    criterion(4, ok, f"{solves} solves, {uncertified} without equal primal/dual, "
                     f"two overlapping edges size {r_two.size}, K_6^(3) size {r_k6.size}")


def _triangle_brute(edges) -> bool:
    adj = {}
    for a, b in edges:
        adj.setdefault(a, set()).add(b)
        adj.setdefault(b, set()).add(a)
    return any(adj[a] & adj[b] for a, b in edges)


def test_criterion_5_dense_graph_structure(criterion):
    gamma = Fraction(1, 10)
    n = 40
    rng = random.Random(5)
    pairs = list(combinations(range(n), 2))
    low = int((Fraction(1, 2) + gamma) * comb(n, 2)) + 1
    violations = 0
    cross_check = 0
    for _ in range(50):
        triple = []
        for _ in range(3):
            rng.shuffle(pairs)
            triple.append(Hypergraph(n, 2, pairs[: rng.randint(low, comb(n, 2))]))
        report = structure_checks(triple, gamma)
        violations += not (report.in_hypothesis and report.all_hold)
        # independent recomputation of triangles and cross-component overlaps
        cores = []
        for g in triple:
            comp = max(components(g), key=len)
            cores.append({e for e in g.edges if e[0] in comp})
        cross_check += not all(_triangle_brute(c) for c in cores)
        cross_check += not any(cores[a] & cores[b] for a, b in combinations(range(3), 2))
    ok = violations == 0 and cross_check == 0
    criterion(5, ok, f"50 triples at n=40, {violations} reports with a failed predicate, "
                     f"{cross_check} independent triangle/overlap failures")


def test_criterion_6_robust_positives(criterion):
    eta = Fraction(1, 10)
    results = []
    for k, n in ((3, 7), (3, 8), (3, 9), (4, 7), (4, 8)):
        cert = certify_robust(complete_graph(k, n), eta, samples=20)
        radius = cert.C2
        caps = (n ** (4 * k), 10**7 * factorial(k) * n**4)
        within = radius is not None and radius != INFINITY and all(radius <= c for c in caps)
        r1 = cert.matching is not None and cert.matching.holds and cert.matching.samples >= 20
        r2 = cert.enumeration is not None and cert.enumeration.valid
        r3 = cert.rotation is not None and cert.rotation.all_rotatable
        results.append((k, n, cert.status, r1, r2, r3, radius, within))
    ok = all(status == "certified" and r1 and r2 and r3 and within
             for _, _, status, r1, r2, r3, _, within in results)
    summary = ", ".join(f"K_{n}^({k}) {status} radius {radius}" for k, n, status, *_, radius, _w in results)
    criterion(6, ok, summary)


def test_criterion_7_robust_negatives(criterion):
    eta = Fraction(1, 10)
    lines = []
    refuted = True
    for name, g in (("two cliques", two_clique_graph(3, 10)), ("parity", parity_graph(4, 4, 4, mixed=False))):
        cert = certify_robust(g, eta)
        pair = (cert.witness or {}).get("R2", {}).get("pair")
        unreachable = False
        if pair:
            reach = EdgeReach(build_gstar(g).gstar)
            e, f = tuple(pair[0]), tuple(pair[1])
            unreachable = not reach.reaches(e, f)
        refuted &= cert.status == "refuted" and bool(pair) and unreachable
        lines.append(f"{name} {cert.status} with pair {pair}")
    g = two_clique_graph(3, 13)
    tree = random_tree(3, 13, 2, 0)
    oracle = embed_spanning(g, tree, "oracle")
    # the two cliques share no vertex, so a connected spanning tree cannot exist
    connected_parts = len(components(Hypergraph(13, 2, {p for e in g.edges for p in combinations(e, 2)})))
    # exhaustive test-side search on a smaller two-clique instance
    small = two_clique_graph(3, 7)
    small_tree = random_tree(3, 7, 2, 0)
    brute = spanning_embedding_oracle(small.edges, 7, small_tree.edges, small_tree.vertices)
    small_oracle = embed_spanning(small, small_tree, "oracle")
    ok = (refuted and not oracle.success and oracle.witness.get("reason") == "disconnected"
          and connected_parts == 2 and not brute and not small_oracle.success)
    criterion(7, ok, "; ".join(lines) + f"; oracle on two-clique_3_13: {oracle.status} ({oracle.witness.get('reason')})")


def test_criterion_8_rotation_algebra(criterion):
    rng = random.Random(8)
    perms = all_perms(4)
    failures = 0
    for g in (complete_graph(4, 6), complete_graph(4, 7)):
        edge = (0, 1, 2, 3)
        solver = RotationSolver(g, edge)
        for _ in range(10):
            s1, s2 = rng.choice(perms), rng.choice(perms)
            a = rotatability(g, edge, s1, mode="star", solver=solver)
            b = rotatability(g, edge, s2, mode="star", solver=solver)
            both = compose_rotations(a, b)
            failures += not (both.sigma == compose(s1, s2) and solver.holds(both.radius, "star", both.sigma))
    closure_mismatch = 0
    for g in (complete_graph(4, 6), complete_graph(4, 7)):
        edge = (0, 1, 2, 3)
        solver = RotationSolver(g, edge)
        gens = [rotatability(g, edge, parse_perm(t, 4), mode="star", solver=solver) for t in ("(12)", "(13)", "(14)")]
        closure = generator_closure(edge, gens)
        for sigma in perms:
            direct = solver.radius("full", sigma)
            claimed = closure.per_sigma.get(sigma)
            agree = claimed is not None and direct is not None and solver.holds(claimed, "star", sigma)
            closure_mismatch += not agree
    ok = failures == 0 and closure_mismatch == 0
    criterion(8, ok, f"20 composed pairs with {failures} failed re-verifications; "
                     f"closure vs direct verdicts: {closure_mismatch} mismatches over 48 permutations")


def test_criterion_9_end_to_end_embedding(criterion):
    runs = 20
    successes = 0
    invalid = 0
    inconsistent = 0
    slowest = 0.0
    routes = Counter()
    for seed in range(runs):
        g = random_threshold_graph(3, 13, Fraction(85, 100), seed)
        assert min_degree(g, 1).relative >= Fraction(85, 100)
        tree = random_tree(3, 13, 2, 1000 + seed)
        clock = time.perf_counter()
        result = embed_spanning(g, tree, "pipeline")
        slowest = max(slowest, time.perf_counter() - clock)
        routes[result.route] += 1
        if not result.success:
            continue
        images = result.vmap.assignment
        valid = verify_map(tree, g, result.vmap) and sorted(images.values()) == list(range(13))
        invalid += not valid
        # the direct fallback is a plain search, so only absorption runs count
        successes += valid and result.route == "absorption"
        oracle = embed_spanning(g, tree, "oracle")
        inconsistent += not oracle.success
    rate = Fraction(successes, runs)
    ok = rate >= Fraction(9, 10) and invalid == 0 and inconsistent == 0 and slowest < 60
    criterion(9, ok, f"{successes}/{runs} absorption embeddings, routes {dict(routes)}, {invalid} invalid, "
                     f"{inconsistent} oracle inconsistencies, slowest run {slowest:.1f}s")


def _audit_holds(robust: Hypergraph, tree, result, m: int) -> bool:
    """Recompute the three audit conditions from the map and the recorded matching."""
    audit = result.audit
    zeta, theta = audit.params["zeta"], audit.params["theta"]
    isolated = {v for v in robust.vertices if not robust.edges_at(v)}
    loads = Counter(result.phi.assignment.values())
    quota = all(loads[v] <= (1 - zeta) * (0 if v in isolated else 1) * m for v in robust.vertices)
    monotone = all(a <= b for a, b in zip(audit.j, audit.j[1:]))
    fill = all(
        count <= audit.weights.get(audit.order[j - 1], 0) * m + theta * theta * m
        for (j, _x), count in audit.vertex_fill.items()
    )
    total_fill = sum(audit.vertex_fill.values()) <= len(tree)
    return quota and monotone and fill and total_fill and verify_map(tree, robust, result.phi)


def test_criterion_10_assign_audit(criterion):
    runs = []
    runs.append((complete_graph(4, 8), loose_path(4, 33), 0, 25))
    for seed in range(10):
        runs.append((complete_graph(3, 7), random_tree(3, 61, 2 + seed % 2, seed), seed % 7, 40))
    runs.append((complete_graph(3, 9), binary_tree(3, 4), 0, 40))
    bad = 0
    for robust, tree, v1, m in runs:
        result = assign(robust, None, tree, v1=v1, m=m)
        bad += not (_audit_holds(robust, tree, result, m) and result.audit.ok)
    plans = 0
    plan_bad = 0
    for seed in range(5):
        g = random_threshold_graph(3, 13, Fraction(85, 100), seed)
        result = embed_spanning(g, random_tree(3, 13, 2, 1000 + seed), "pipeline")
        plan = result.report.get("plan")
        if plan is None or plan.get("status") == "failed":
            continue
        plans += 1
        audit = plan["audit"]
        plan_bad += not (audit["monotone"] and audit["fill_ok"] and audit["quota_ok"] and not audit["violations"])
    ok = bad == 0 and plan_bad == 0
    criterion(10, ok, f"{len(runs)} direct assign runs with {bad} audit failures; "
                      f"{plans} pipeline plan audits with {plan_bad} failures")
