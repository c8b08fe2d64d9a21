"""Uniform hypergraphs: degrees, shadows, links, tight connectivity.

Vertices are the integers ``0..n-1`` and every edge is a sorted tuple.
All densities are exact :class:`fractions.Fraction` values.
"""
from __future__ import annotations

import json
import random
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations
from math import comb
from typing import Iterable, Sequence

Edge = tuple[int, ...]


class ParameterError(ValueError):
    """Raised when an argument lies outside the documented range."""


class FormatError(ValueError):
    """Raised when a graph or tree file cannot be parsed."""


def canon(vertices: Iterable[int]) -> Edge:
    return tuple(sorted(vertices))


@dataclass(frozen=True)
class Hypergraph:
    """A k-uniform hypergraph on the vertex set ``range(n)``.

    ``k`` may be 1 (or 0) for intermediate links; callers that need the
    headline objects validate ``k >= 2`` themselves.
    """

    n: int
    k: int
    edges: frozenset[Edge]
    _incidence: dict[int, tuple[Edge, ...]] = field(
        default=None, compare=False, repr=False, hash=False
    )

    def __init__(self, n: int, k: int, edges: Iterable[Iterable[int]] = ()):
        if n < 0 or k < 0:
            raise ParameterError("n and k must be non-negative")
        normalized = set()
        for raw in edges:
            edge = canon(raw)
            if len(edge) != k or len(set(edge)) != k:
                raise ParameterError(f"edge {raw!r} is not a set of {k} distinct vertices")
            if edge and (edge[0] < 0 or edge[-1] >= n):
                raise ParameterError(f"edge {raw!r} has a vertex outside 0..{n - 1}")
            normalized.add(edge)
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "k", k)
        object.__setattr__(self, "edges", frozenset(normalized))
        incidence: dict[int, list[Edge]] = {v: [] for v in range(n)}
        for edge in sorted(normalized):
            for v in edge:
                incidence[v].append(edge)
        object.__setattr__(
            self, "_incidence", {v: tuple(es) for v, es in incidence.items()}
        )

    @property
    def vertices(self) -> range:
        return range(self.n)

    def sorted_edges(self) -> list[Edge]:
        return sorted(self.edges)

    def edges_at(self, v: int) -> tuple[Edge, ...]:
        return self._incidence[v]

    def has_edge(self, vertices: Iterable[int]) -> bool:
        return canon(vertices) in self.edges

    def vertex_degree(self, v: int) -> int:
        return len(self._incidence[v])

    def isolated_vertices(self) -> list[int]:
        return [v for v in range(self.n) if not self._incidence[v]]

    def __len__(self) -> int:
        return len(self.edges)

    def __contains__(self, edge: object) -> bool:
        return isinstance(edge, tuple) and canon(edge) in self.edges

    def induced(self, keep: Iterable[int]) -> "Hypergraph":
        """Edges inside ``keep``; the vertex universe is unchanged."""
        keep_set = set(keep)
        return Hypergraph(self.n, self.k, (e for e in self.edges if keep_set.issuperset(e)))

    def to_text(self) -> str:
        lines = [f"{self.k} {self.n}"]
        lines.extend(" ".join(map(str, e)) for e in self.sorted_edges())
        return "\n".join(lines) + "\n"

    def to_json(self) -> dict:
        return {"k": self.k, "n": self.n, "edges": [list(e) for e in self.sorted_edges()]}

    @classmethod
    def from_text(cls, text: str) -> "Hypergraph":
        rows = [line.split() for line in text.splitlines() if line.strip() and not line.startswith("#")]
        if not rows or len(rows[0]) != 2:
            raise FormatError("graph text must start with a 'k n' header line")
        try:
            k, n = int(rows[0][0]), int(rows[0][1])
            edges = [tuple(int(tok) for tok in row) for row in rows[1:]]
        except ValueError as exc:
            raise FormatError(str(exc)) from exc
        try:
            return cls(n, k, edges)
        except ParameterError as exc:
            raise FormatError(str(exc)) from exc

    @classmethod
    def from_json(cls, data: dict | str) -> "Hypergraph":
        if isinstance(data, str):
            data = json.loads(data)
        try:
            return cls(int(data["n"]), int(data["k"]), [tuple(e) for e in data["edges"]])
        except (KeyError, TypeError, ParameterError) as exc:
            raise FormatError(f"bad graph JSON: {exc}") from exc


def load_graph(path: str) -> Hypergraph:
    with open(path, encoding="utf-8") as handle:
        text = handle.read()
    if text.lstrip().startswith("{"):
        return Hypergraph.from_json(text)
    return Hypergraph.from_text(text)


def save_graph(graph: Hypergraph, path: str) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        if path.endswith(".json"):
            json.dump(graph.to_json(), handle, sort_keys=True)
            handle.write("\n")
        else:
            handle.write(graph.to_text())


# -- shadows and links ---------------------------------------------------


def shadow_sets(graph: Hypergraph, j: int) -> frozenset[Edge]:
    """All j-subsets of edges, for any 0 <= j <= k (j = 0 gives the empty set)."""
    if not 0 <= j <= graph.k:
        raise ParameterError(f"shadow level {j} outside 0..{graph.k}")
    if j == graph.k:
        return graph.edges
    out: set[Edge] = set()
    for edge in graph.edges:
        out.update(combinations(edge, j))
    return frozenset(out)


def shadow(graph: Hypergraph, j: int) -> Hypergraph:
    if not 2 <= j <= graph.k:
        raise ParameterError(f"shadow level must satisfy 2 <= j <= k={graph.k}, got {j}")
    return Hypergraph(graph.n, j, shadow_sets(graph, j))


def link(graph: Hypergraph, subset: Iterable[int]) -> Hypergraph:
    """Edges through ``subset`` with ``subset`` removed; same vertex universe."""
    s = canon(subset)
    if len(s) >= graph.k:
        raise ParameterError(f"link needs |S| < k, got |S|={len(s)} and k={graph.k}")
    if len(set(s)) != len(s) or any(not 0 <= v < graph.n for v in s):
        raise ParameterError(f"{s} is not a vertex set of the graph")
    s_set = set(s)
    if s:
        candidates = graph.edges_at(s[0])
    else:
        candidates = tuple(graph.edges)
    residues = (tuple(v for v in e if v not in s_set) for e in candidates if s_set.issubset(e))
    return Hypergraph(graph.n, graph.k - len(s), residues)


def link_shadow(graph: Hypergraph, subset: Iterable[int], j: int) -> frozenset[Edge]:
    """The j-sets J with J and ``subset`` disjoint and J ∪ subset in some edge."""
    return shadow_sets(link(graph, subset), j)


# -- degrees ---------------------------------------------------------------


@dataclass(frozen=True)
class DegreeReport:
    subset: Edge
    count: int
    relative: Fraction


def _degree_count(graph: Hypergraph, s: Edge) -> int:
    if not s:
        return len(graph.edges)
    s_set = set(s)
    return sum(1 for e in graph.edges_at(s[0]) if s_set.issubset(e))


def degree(graph: Hypergraph, subset: Iterable[int]) -> DegreeReport:
    s = canon(subset)
    ell = len(s)
    if not 1 <= ell <= graph.k - 1:
        raise ParameterError(f"degree needs 1 <= |S| <= k-1, got {ell}")
    count = _degree_count(graph, s)
    total = comb(graph.n - ell, graph.k - ell)
    return DegreeReport(s, count, Fraction(count, total) if total else Fraction(0))


def min_degree(graph: Hypergraph, ell: int) -> DegreeReport:
    if not 1 <= ell <= graph.k - 1:
        raise ParameterError(f"min_degree needs 1 <= l <= k-1, got {ell}")
    if graph.n < ell:
        raise ParameterError("fewer vertices than l")
    best: DegreeReport | None = None
    for s in combinations(range(graph.n), ell):
        report = degree(graph, s)
        if best is None or report.count < best.count:
            best = report
            if best.count == 0:
                break
    assert best is not None
    return best


def max_degree(graph: Hypergraph, ell: int) -> DegreeReport:
    if not 1 <= ell <= graph.k - 1:
        raise ParameterError(f"max_degree needs 1 <= l <= k-1, got {ell}")
    return max((degree(graph, s) for s in combinations(range(graph.n), ell)), key=lambda r: r.count)


# -- tight connectivity ------------------------------------------------------


def _ridge_index(graph: Hypergraph) -> dict[Edge, list[Edge]]:
    index: dict[Edge, list[Edge]] = {}
    for e in graph.sorted_edges():
        for ridge in combinations(e, graph.k - 1):
            index.setdefault(ridge, []).append(e)
    return index


def tight_components(graph: Hypergraph) -> list[frozenset[Edge]]:
    """Classes of edges joined by walks whose consecutive edges share k-1 vertices.

    Components are listed by their smallest edge.
    """
    index = _ridge_index(graph)
    seen: set[Edge] = set()
    components = []
    for start in graph.sorted_edges():
        if start in seen:
            continue
        seen.add(start)
        comp = [start]
        queue = deque([start])
        while queue:
            e = queue.popleft()
            for ridge in combinations(e, graph.k - 1):
                for f in index[ridge]:
                    if f not in seen:
                        seen.add(f)
                        comp.append(f)
                        queue.append(f)
        components.append(frozenset(comp))
    return components


def tight_walk(graph: Hypergraph, start: Iterable[int], end: Iterable[int]) -> list[Edge] | None:
    """Shortest tight walk from ``start`` to ``end`` or None if in different classes."""
    e, f = canon(start), canon(end)
    if e not in graph.edges or f not in graph.edges:
        raise ParameterError("both endpoints must be edges of the graph")
    index = _ridge_index(graph)
    parent: dict[Edge, Edge | None] = {e: None}
    queue = deque([e])
    while queue:
        cur = queue.popleft()
        if cur == f:
            break
        for ridge in combinations(cur, graph.k - 1):
            for nxt in index[ridge]:
                if nxt not in parent:
                    parent[nxt] = cur
                    queue.append(nxt)
    if f not in parent:
        return None
    walk = [f]
    while parent[walk[-1]] is not None:
        walk.append(parent[walk[-1]])
    return walk[::-1]


# -- perturbed degree --------------------------------------------------------


@dataclass(frozen=True)
class PerturbedDegreeVerdict:
    alpha: Fraction
    delta: Fraction
    holds: bool
    violations: tuple[tuple[str, Edge], ...]


def verify_perturbed_degree(graph: Hypergraph, ell: int, alpha, delta) -> PerturbedDegreeVerdict:
    """Check conditions P1-P3 at every level j = 1..ell.

    P1: every j-set in the shadow has relative degree at least delta.
    P2: at most an alpha fraction of j-sets is missing from the shadow.
    P3: every (j-1)-set of the shadow sees less than an alpha fraction of
    missing j-sets.  At j = 1 the (j-1)-set is the empty set, whose "missing
    neighbours" are the isolated vertices.  A zero fraction never counts as a
    violation so that alpha = 0 is usable on graphs with a full shadow.
    """
    alpha, delta = Fraction(alpha), Fraction(delta)
    if not 1 <= ell <= graph.k - 1:
        raise ParameterError(f"l must lie in 1..k-1, got {ell}")
    if not (0 <= alpha <= 1 and 0 <= delta <= 1):
        raise ParameterError("alpha and delta must lie in [0, 1]")
    n, k = graph.n, graph.k
    violations: list[tuple[str, Edge]] = []
    for j in range(1, ell + 1):
        present = shadow_sets(graph, j)
        total = comb(n - j, k - j)
        for s in sorted(present):
            if Fraction(_degree_count(graph, s), total) < delta:
                violations.append(("P1", s))
        missing = comb(n, j) - len(present)
        if Fraction(missing, comb(n, j)) > alpha:
            violations.append(("P2", ()))
        for lower in sorted(shadow_sets(graph, j - 1)):
            lower_set = set(lower)
            absent = sum(
                1
                for v in range(n)
                if v not in lower_set and canon(lower + (v,)) not in present
            )
            frac = Fraction(absent, n - j + 1)
            if frac > 0 and frac >= alpha:
                violations.append(("P3", lower))
    return PerturbedDegreeVerdict(alpha, delta, not violations, tuple(violations))


# -- standard families ---------------------------------------------------------


def complete_graph(k: int, n: int, vertices: Sequence[int] | None = None, universe: int | None = None) -> Hypergraph:
    verts = list(range(n)) if vertices is None else list(vertices)
    size = n if universe is None else universe
    return Hypergraph(size, k, combinations(sorted(verts), k))


def two_clique_graph(k: int, n: int, first: int | None = None) -> Hypergraph:
    """Disjoint complete k-graphs on floor(n/2) and ceil(n/2) vertices."""
    first = n // 2 if first is None else first
    left = combinations(range(first), k)
    right = combinations(range(first, n), k)
    return Hypergraph(n, k, list(left) + list(right))


def parity_graph(k: int, part_one: int, part_two: int, mixed: bool = True) -> Hypergraph:
    """All k-sets meeting the first part in an even number of vertices.

    With ``mixed`` False only the edges inside one part are kept.
    """
    n = part_one + part_two
    edges = []
    for e in combinations(range(n), k):
        inside = sum(1 for v in e if v < part_one)
        if inside % 2:
            continue
        if not mixed and 0 < inside < k:
            continue
        edges.append(e)
    return Hypergraph(n, k, edges)


def random_graph(k: int, n: int, density: float, seed: int) -> Hypergraph:
    rng = random.Random(seed)
    return Hypergraph(n, k, (e for e in combinations(range(n), k) if rng.random() < density))


def random_threshold_graph(k: int, n: int, min_relative: Fraction, seed: int, density: float = 0.92, tries: int = 200) -> Hypergraph:
    """A random k-graph whose minimum relative vertex degree is at least ``min_relative``."""
    rng = random.Random(seed)
    for _ in range(tries):
        g = Hypergraph(n, k, (e for e in combinations(range(n), k) if rng.random() < density))
        if min_degree(g, 1).relative >= Fraction(min_relative):
            return g
    raise ParameterError(f"no sample reached relative degree {min_relative} in {tries} tries")
