"""Fractional matchings by exact simplex, maximum matchings in graphs, and
the structural checks on dense 2-graphs that feed the matching argument."""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations
from math import ceil, comb
from typing import Callable, Iterable, Mapping, Sequence

from .hypercore import Edge, Hypergraph, ParameterError, link, shadow_sets

Weighting = Mapping[int, Fraction]


def uniform_weighting(n: int, value=1) -> dict[int, Fraction]:
    return {v: Fraction(value) for v in range(n)}


def check_weighting(graph: Hypergraph, omega: Weighting) -> dict[int, Fraction]:
    out = {}
    for v in range(graph.n):
        w = Fraction(omega.get(v, 0))
        if not 0 <= w <= 1:
            raise ParameterError(f"weight of vertex {v} is {w}, outside [0, 1]")
        out[v] = w
    return out


# -- exact simplex --------------------------------------------------------------


@dataclass
class LPResult:
    value: Fraction
    primal: list[Fraction]
    dual: list[Fraction]
    pivots: int


def _simplex_max(columns: Sequence[Sequence[int]], capacities: Sequence[Fraction]) -> LPResult:
    """max sum x_j  s.t.  for each row i, sum_{j : i in columns[j]} x_j <= cap_i,  x >= 0.

    Dense tableau in exact rationals; Bland's rule (smallest entering index,
    smallest leaving basic index on ties) prevents cycling.
    """
    m = len(columns)
    rows = len(capacities)
    width = m + rows
    tableau = [[Fraction(0)] * (width + 1) for _ in range(rows)]
    for j, col in enumerate(columns):
        for i in col:
            tableau[i][j] = Fraction(1)
    for i in range(rows):
        tableau[i][m + i] = Fraction(1)
        tableau[i][width] = Fraction(capacities[i])
    objective = [Fraction(-1)] * m + [Fraction(0)] * rows + [Fraction(0)]
    basis = [m + i for i in range(rows)]
    pivots = 0
    while True:
        entering = next((j for j in range(width) if objective[j] < 0), None)
        if entering is None:
            break
        best = None
        for i in range(rows):
            a = tableau[i][entering]
            if a > 0:
                ratio = tableau[i][width] / a
                key = (ratio, basis[i])
                if best is None or key < best[0]:
                    best = (key, i)
        if best is None:
            raise AssertionError("unbounded, impossible with non-negative capacities")
        r = best[1]
        pivot_row = tableau[r]
        piv = pivot_row[entering]
        if piv != 1:
            tableau[r] = pivot_row = [x / piv for x in pivot_row]
        nonzero = [j for j, x in enumerate(pivot_row) if x]
        for i in range(rows):
            if i != r:
                factor = tableau[i][entering]
                if factor:
                    row = tableau[i]
                    for j in nonzero:
                        row[j] -= factor * pivot_row[j]
        factor = objective[entering]
        for j in nonzero:
            objective[j] -= factor * pivot_row[j]
        basis[r] = entering
        pivots += 1
    primal = [Fraction(0)] * m
    for i, b in enumerate(basis):
        if b < m:
            primal[b] = tableau[i][width]
    dual = [objective[m + i] for i in range(rows)]
    return LPResult(objective[width], primal, dual, pivots)


@dataclass
class FractionalMatching:
    weights: dict[Edge, Fraction]
    size: Fraction
    dual: dict[int, Fraction] = field(default_factory=dict)

    def load(self, v: int) -> Fraction:
        return sum((w for e, w in self.weights.items() if v in e), Fraction(0))

    def to_json(self) -> dict:
        return {
            "weights": [[list(e), str(w)] for e, w in sorted(self.weights.items()) if w],
            "size": str(self.size),
            "dual": [[v, str(y)] for v, y in sorted(self.dual.items())],
        }


class CertificateError(AssertionError):
    """An LP solution failed its own optimality certificate."""


def certify(graph: Hypergraph, omega: Weighting, matching: FractionalMatching) -> None:
    """Check primal feasibility, dual feasibility and equal objectives."""
    omega = check_weighting(graph, omega)
    for e, w in matching.weights.items():
        if w < 0 or e not in graph.edges:
            raise CertificateError(f"bad primal entry {e}: {w}")
    for v in range(graph.n):
        if matching.load(v) > omega[v]:
            raise CertificateError(f"vertex {v} overloaded")
    if sum(matching.weights.values(), Fraction(0)) != matching.size:
        raise CertificateError("size does not equal the weight sum")
    y = matching.dual
    if any(y.get(v, 0) < 0 for v in range(graph.n)):
        raise CertificateError("negative dual value")
    for e in graph.edges:
        if sum((y.get(v, Fraction(0)) for v in e), Fraction(0)) < 1:
            raise CertificateError(f"dual constraint violated on {e}")
    dual_value = sum((omega[v] * y.get(v, Fraction(0)) for v in range(graph.n)), Fraction(0))
    if dual_value != matching.size:
        raise CertificateError(f"primal {matching.size} != dual {dual_value}")


def max_fractional_matching(graph: Hypergraph, omega: Weighting) -> FractionalMatching:
    """Exact optimum of max sum x_e subject to vertex loads <= omega, x >= 0.

    The optimal dual (a fractional vertex cover weighted by omega) is
    returned alongside and the pair is certified before returning.
    """
    omega = check_weighting(graph, omega)
    edges = graph.sorted_edges()
    result = _simplex_max(edges, [omega[v] for v in range(graph.n)])
    matching = FractionalMatching(
        {e: x for e, x in zip(edges, result.primal)},
        result.value,
        {v: y for v, y in enumerate(result.dual)},
    )
    certify(graph, omega, matching)
    return matching


def perfect_size(graph: Hypergraph, omega: Weighting) -> Fraction:
    return sum((Fraction(w) for w in check_weighting(graph, omega).values()), Fraction(0)) / graph.k


def is_perfect(graph: Hypergraph, omega: Weighting, matching: FractionalMatching | None = None) -> bool:
    matching = matching or max_fractional_matching(graph, omega)
    return matching.size == perfect_size(graph, omega)


class HypothesisError(ValueError):
    def __init__(self, message: str, vertex: int | None = None):
        super().__init__(message)
        self.vertex = vertex


def link_lift(graph: Hypergraph, omega: Weighting, size) -> FractionalMatching:
    """An omega-fractional matching of exactly ``size``, after checking that
    every non-isolated vertex's link has one of that size."""
    omega = check_weighting(graph, omega)
    size = Fraction(size)
    if size == 0:
        return FractionalMatching({}, Fraction(0), {})
    if size > perfect_size(graph, omega):
        raise HypothesisError(f"size {size} exceeds sum(omega)/k")
    for v in graph.isolated_vertices():
        if omega[v]:
            raise HypothesisError(f"isolated vertex {v} has positive weight", v)
    for v in range(graph.n):
        if not graph.edges_at(v):
            continue
        local = max_fractional_matching(link(graph, [v]), omega)
        if local.size < size:
            raise HypothesisError(f"link of vertex {v} has fractional matching number {local.size} < {size}", v)
    best = max_fractional_matching(graph, omega)
    if best.size < size:
        raise AssertionError(f"lifting failed: optimum {best.size} < {size}")
    scale = size / best.size
    return FractionalMatching({e: w * scale for e, w in best.weights.items()}, size, {})


# -- maximum matching in graphs (Edmonds) -------------------------------------------


def maximum_matching(n: int, pairs: Iterable[tuple[int, int]]) -> list[tuple[int, int]]:
    """Maximum cardinality matching of a simple graph by blossom contraction."""
    adjacency: list[list[int]] = [[] for _ in range(n)]
    for a, b in pairs:
        if a != b:
            adjacency[a].append(b)
            adjacency[b].append(a)
    for nbrs in adjacency:
        nbrs.sort()
    match = [-1] * n
    parent = [-1] * n
    base = list(range(n))

    def lca(a: int, b: int) -> int:
        seen = [False] * n
        while True:
            a = base[a]
            seen[a] = True
            if match[a] == -1:
                break
            a = parent[match[a]]
        while True:
            b = base[b]
            if seen[b]:
                return b
            b = parent[match[b]]

    def mark_path(v: int, b: int, child: int, in_blossom: list[bool]) -> None:
        while base[v] != b:
            in_blossom[base[v]] = in_blossom[base[match[v]]] = True
            parent[v] = child
            child = match[v]
            v = parent[match[v]]

    def find_path(root: int) -> int:
        used = [False] * n
        for i in range(n):
            parent[i] = -1
            base[i] = i
        used[root] = True
        queue = deque([root])
        while queue:
            v = queue.popleft()
            for to in adjacency[v]:
                if base[v] == base[to] or match[v] == to:
                    continue
                if to == root or (match[to] != -1 and parent[match[to]] != -1):
                    cur = lca(v, to)
                    in_blossom = [False] * n
                    mark_path(v, cur, to, in_blossom)
                    mark_path(to, cur, v, in_blossom)
                    for i in range(n):
                        if in_blossom[base[i]]:
                            base[i] = cur
                            if not used[i]:
                                used[i] = True
                                queue.append(i)
                elif parent[to] == -1:
                    parent[to] = v
                    if match[to] == -1:
                        return to
                    used[match[to]] = True
                    queue.append(match[to])
        return -1

    for v in range(n):
        if match[v] == -1:
            end = find_path(v)
            while end != -1:
                prev = parent[end]
                nxt = match[prev]
                match[end] = prev
                match[prev] = end
                end = nxt
    return sorted((a, b) for a, b in enumerate(match) if b != -1 and a < b)


def graph_pairs(graph: Hypergraph) -> list[tuple[int, int]]:
    if graph.k != 2:
        raise ParameterError("expected a 2-graph")
    return graph.sorted_edges()


def erdos_gallai_bound(n: int, s: int) -> int:
    """More edges than this force a matching of size s on n vertices."""
    return max(comb(2 * s - 1, 2), comb(s - 1, 2) + (s - 1) * (n - s + 1))


@dataclass
class ErdosGallaiReport:
    matching: list[tuple[int, int]]
    edges: int
    threshold: int
    target: int

    @property
    def above_threshold(self) -> bool:
        return self.edges > self.threshold

    @property
    def consistent(self) -> bool:
        return not self.above_threshold or len(self.matching) >= self.target


def ergallai_matching(graph: Hypergraph, s: int) -> ErdosGallaiReport:
    m = maximum_matching(graph.n, graph_pairs(graph))
    report = ErdosGallaiReport(m, len(graph.edges), erdos_gallai_bound(graph.n, s), s)
    if not report.consistent:
        raise AssertionError(f"counterexample: {report.edges} edges but matching {len(m)} < {s}")
    return report


# -- dense 2-graph structure ------------------------------------------------------------


def components(graph: Hypergraph) -> list[list[int]]:
    """Connected components of non-isolated vertices, largest first, ties by
    smallest vertex."""
    adjacency: dict[int, list[int]] = {v: [] for v in range(graph.n)}
    for e in graph.edges:
        for a in e:
            for b in e:
                if a != b:
                    adjacency[a].append(b)
    seen: set[int] = set()
    out = []
    for v in range(graph.n):
        if v in seen or not adjacency[v]:
            continue
        comp = [v]
        seen.add(v)
        queue = deque([v])
        while queue:
            x = queue.popleft()
            for y in adjacency[x]:
                if y not in seen:
                    seen.add(y)
                    comp.append(y)
                    queue.append(y)
        out.append(sorted(comp))
    out.sort(key=lambda c: (-len(c), c[0]))
    return out


def largest_component(graph: Hypergraph) -> tuple[Hypergraph, bool]:
    """Induced subgraph on the largest component and whether the maximum
    order was shared by another component."""
    comps = components(graph)
    if not comps:
        return Hypergraph(graph.n, graph.k), False
    tie = len(comps) > 1 and len(comps[1]) == len(comps[0])
    return graph.induced(comps[0]), tie


def has_triangle(graph: Hypergraph) -> tuple[int, int, int] | None:
    adjacency: dict[int, set[int]] = {v: set() for v in range(graph.n)}
    for a, b in graph.edges:
        adjacency[a].add(b)
        adjacency[b].add(a)
    for a, b in sorted(graph.edges):
        common = adjacency[a] & adjacency[b]
        if common:
            return (a, b, min(common))
    return None


@dataclass
class StructureReport:
    in_hypothesis: bool
    component_sizes: list[int]
    m1: list[bool]
    m2: list[bool]
    m3: list[bool]
    m4: bool | None
    matching_sizes: list[int]
    triangles: list

    @property
    def all_hold(self) -> bool:
        ok = all(self.m1) and all(self.m2) and all(self.m3)
        return ok and (self.m4 is None or self.m4)


def structure_checks(graphs: Sequence[Hypergraph] | Hypergraph, gamma) -> StructureReport:
    """Evaluate (M1)-(M3) on each graph and (M4) when three graphs are given."""
    if isinstance(graphs, Hypergraph):
        graphs = [graphs]
    gamma = Fraction(gamma)
    n = graphs[0].n
    dense = (Fraction(1, 2) + gamma) * comb(n, 2)
    in_hyp = all(len(g.edges) > dense for g in graphs)
    sizes, m1, m2, m3, msizes, tris, cores = [], [], [], [], [], [], []
    for g in graphs:
        core, _tie = largest_component(g)
        order = len(components(core)[0]) if core.edges else 0
        sizes.append(order)
        edges_core = len(core.edges)
        m1.append(
            order > (Fraction(1, 2) + gamma) * n
            and edges_core > dense - comb(n - order, 2)
            and edges_core >= (Fraction(1, 4) + gamma) * comb(n, 2)
        )
        mm = maximum_matching(n, core.sorted_edges())
        msizes.append(len(mm))
        m2.append(len(mm) >= ceil((Fraction(1, 4) + gamma / 3) * n))
        tri = has_triangle(core)
        tris.append(tri)
        m3.append(tri is not None)
        cores.append(core)
    m4 = None
    if len(graphs) == 3:
        m4 = any(cores[a].edges & cores[b].edges for a, b in combinations(range(3), 2))
    return StructureReport(in_hyp, sizes, m1, m2, m3, m4, msizes, tris)


def majorizes(a: Sequence, b: Sequence) -> bool:
    if len(a) != len(b):
        return False
    xs = sorted((Fraction(x) for x in a), reverse=True)
    ys = sorted((Fraction(y) for y in b), reverse=True)
    pa = pb = Fraction(0)
    for x, y in zip(xs, ys):
        pa += x
        pb += y
        if pa < pb:
            return False
    return pa == pb


def karamata(a: Sequence, b: Sequence, f: Callable) -> bool:
    """True when the majorization-implies-convex-sum inequality holds for
    this instance (vacuously when ``a`` does not majorize ``b``)."""
    if not majorizes(a, b):
        return True
    return sum(f(Fraction(x)) for x in a) >= sum(f(Fraction(y)) for y in b)


# -- matchings from link components ------------------------------------------------------


def component_matching(core: Hypergraph, omega: Weighting) -> FractionalMatching:
    """Weight each edge of a maximum matching by the smaller endpoint weight."""
    pairs = maximum_matching(core.n, core.sorted_edges())
    weights = {
        (a, b): min(Fraction(omega.get(a, 0)), Fraction(omega.get(b, 0))) for a, b in pairs
    }
    return FractionalMatching(weights, sum(weights.values(), Fraction(0)), {})


@dataclass
class TraceStep:
    subset: Edge
    size: Fraction
    needed: Fraction

    @property
    def ok(self) -> bool:
        return self.size >= self.needed


def induction_trace(gstar: Hypergraph, omega: Weighting, levels: Iterable[int] | None = None) -> list[TraceStep]:
    """For each set S in the shadow, from |S| = k-2 down to the empty set,
    the omega-fractional matching number of the link of S in ``gstar``
    compared with sum(omega)/k."""
    omega = check_weighting(gstar, omega)
    needed = sum(omega.values(), Fraction(0)) / gstar.k
    k = gstar.k
    levels = range(k - 2, -1, -1) if levels is None else levels
    steps = []
    for j in levels:
        for s in sorted(shadow_sets(gstar, j)):
            lk = link(gstar, s) if s else gstar
            local = dict(omega)
            for v in s:
                local[v] = Fraction(0)
            size = max_fractional_matching(lk, local).size
            steps.append(TraceStep(s, size, needed))
    return steps
