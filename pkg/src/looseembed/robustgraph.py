"""The robust spanning subgraph G*, the label machinery that orders its edges,
and the three-part robustness certificate.

G* keeps, for every (k-2)-set A in the shadow, only the edges A + uv with uv in
the largest component C_A of the 2-graph link of A.  Edge sets E_A for smaller
A are unions over (k-2)-supersets.

The labelling works top-down over the sets A with |A| of the same parity as k.
For |A| = k-2 the pair graph K_A is the whole link.  For smaller A, either all
of E_A is mutually reachable and K_A is the whole pair shadow of A, or the pairs
are coloured by mutual reachability of their label edges and K_A is the pair
shadow induced on the second largest monochromatic component.  Everything the
construction relies on is re-checked on the instance; failed hypotheses are
reported, not assumed.
"""
from __future__ import annotations

import random
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations
from math import comb
from typing import Iterable, Sequence

from .homomorphism import (
    INFINITY,
    ClosureError,
    RotationSolver,
    ReachabilityIndex,
    generator_closure,
    rotatability,
    transfer_radius,
)
from .hypercore import Edge, Hypergraph, ParameterError, canon, link, shadow_sets, tight_components
from .matching import components, induction_trace, max_fractional_matching, perfect_size
from .perms import Perm, all_perms, compose, identity, inverse, transposition

Pair = tuple[int, int]


def _pair_graph(n: int, pairs: Iterable[Sequence[int]]) -> Hypergraph:
    return Hypergraph(n, 2, pairs)


def _minus(a: Edge, b: Iterable[int]) -> Edge:
    drop = set(b)
    return tuple(v for v in a if v not in drop)


def _edges_json(edges: Iterable[Edge]) -> list[list[int]]:
    return [list(e) for e in sorted(edges)]


# -- G* ---------------------------------------------------------------------------


@dataclass
class RobustSubgraph:
    base: Hypergraph
    gstar: Hypergraph
    components: dict[Edge, Hypergraph]
    provenance: dict[Edge, tuple[Edge, ...]]
    ties: list[Edge]
    _edge_sets: dict[Edge, frozenset[Edge]] = field(default_factory=dict, repr=False)

    def edge_set(self, subset: Iterable[int]) -> frozenset[Edge]:
        """E_A: the G* edges contributed by (k-2)-sets containing A."""
        return self._edge_sets.get(canon(subset), frozenset())

    def to_json(self) -> dict:
        return {
            "k": self.base.k,
            "n": self.base.n,
            "base_edges": len(self.base),
            "gstar": self.gstar.to_json(),
            "components": {
                " ".join(map(str, a)): _edges_json(c.edges) for a, c in sorted(self.components.items())
            },
            "provenance": {
                " ".join(map(str, e)): [list(a) for a in srcs] for e, srcs in sorted(self.provenance.items())
            },
            "ties": [list(a) for a in self.ties],
        }


def build_gstar(graph: Hypergraph) -> RobustSubgraph:
    """Keep the edges A + uv with uv in the largest component of the link of A.

    Ties between components of maximum order go to the one holding the
    smallest vertex; every such A is listed in ``ties``.
    """
    k = graph.k
    if k < 2:
        raise ParameterError("G* needs k >= 2")
    comps: dict[Edge, Hypergraph] = {}
    provenance: dict[Edge, list[Edge]] = {}
    ties: list[Edge] = []
    top: dict[Edge, set[Edge]] = {}
    for a in sorted(shadow_sets(graph, k - 2)):
        lk = link(graph, a) if a else graph
        parts = components(lk)
        keep = parts[0]
        if len(parts) > 1 and len(parts[1]) == len(keep):
            ties.append(a)
        core = lk.induced(keep)
        comps[a] = core
        top[a] = set()
        for uv in core.edges:
            e = canon(a + uv)
            top[a].add(e)
            provenance.setdefault(e, []).append(a)
    edge_sets: dict[Edge, set[Edge]] = {}
    for a, es in top.items():
        for size in range(len(a) + 1):
            for sub in combinations(a, size):
                edge_sets.setdefault(sub, set()).update(es)
    gstar = Hypergraph(graph.n, k, provenance)
    return RobustSubgraph(
        graph,
        gstar,
        comps,
        {e: tuple(srcs) for e, srcs in provenance.items()},
        ties,
        {a: frozenset(es) for a, es in edge_sets.items()},
    )


def link_containment(graph: Hypergraph, subset: Iterable[int], robust: RobustSubgraph | None = None) -> list[Edge]:
    """Edges of the G* of the link of B that are missing from the link of G* at B.

    An empty list means the containment holds for this B.
    """
    b = canon(subset)
    robust = robust or build_gstar(graph)
    inner = build_gstar(link(graph, b) if b else graph).gstar
    outer = link(robust.gstar, b) if b else robust.gstar
    return sorted(inner.edges - outer.edges)


# -- edge-level reachability ---------------------------------------------------------


class EdgeReach:
    """Saturated reach sets of every edge, as bitmasks over the edge list.

    ``reaches(a, b)`` means b is reachable from a: every vertex of a lies in the
    fixed point of b.
    """

    def __init__(self, graph: Hypergraph):
        self.graph = graph
        self.edges = graph.sorted_edges()
        self.position = {e: i for i, e in enumerate(self.edges)}
        self.index = ReachabilityIndex(graph)
        self._from: dict[Edge, int] = {}
        for f in self.edges:
            final = self.index.of(f).levels[-1]
            mask = 0
            for i, e in enumerate(self.edges):
                if final.issuperset(e):
                    mask |= 1 << i
            self._from[f] = mask
        self._classes: dict[Edge, int] | None = None

    def reaches(self, source: Edge, target: Edge) -> bool:
        return bool(self._from[target] >> self.position[source] & 1)

    def mutual(self, a: Edge, b: Edge) -> bool:
        return self.reaches(a, b) and self.reaches(b, a)

    def radius(self, source: Edge, target: Edge) -> float:
        return self.index.edge_radius(source, target)

    def classes(self) -> dict[Edge, int]:
        """Mutual-reachability classes, numbered by their smallest edge."""
        if self._classes is None:
            out: dict[Edge, int] = {}
            count = 0
            for e in self.edges:
                if e in out:
                    continue
                i = self.position[e]
                for f in self.edges:
                    j = self.position[f]
                    if f not in out and self._from[f] >> i & 1 and self._from[e] >> j & 1:
                        out[f] = count
                count += 1
            self._classes = out
        return self._classes

    def incomparable_pair(self) -> tuple[Edge, Edge] | None:
        for a, b in combinations(self.edges, 2):
            if not self.reaches(a, b) and not self.reaches(b, a):
                return a, b
        return None


# -- colourings -----------------------------------------------------------------------


class _UnionFind:
    def __init__(self, items: Iterable):
        self.parent = {x: x for x in items}

    def find(self, x):
        while self.parent[x] != x:
            self.parent[x] = self.parent[self.parent[x]]
            x = self.parent[x]
        return x

    def union(self, a, b) -> None:
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self.parent[max(ra, rb)] = min(ra, rb)


@dataclass(frozen=True)
class ColourComponent:
    colour: int
    vertices: tuple[int, ...]
    edges: tuple[Pair, ...]


@dataclass
class ColouringAnalysis:
    n: int
    colours: dict[Pair, int]
    components: list[ColourComponent]
    rainbow: list[tuple[int, int, int]]
    overloaded: dict[int, tuple[int, ...]]
    spanning: bool
    checks: dict[str, bool | None]

    @property
    def gallai(self) -> bool:
        return not self.rainbow

    @property
    def locally_two(self) -> bool:
        return not self.overloaded

    @property
    def case(self) -> str:
        # (g1)/(c1) when the largest component spans, (g2)/(c2) otherwise
        return "spanning" if self.spanning else "split"

    def component_sizes(self) -> list[int]:
        return [len(c.vertices) for c in self.components]

    def to_json(self) -> dict:
        return {
            "colours": {f"{a} {b}": c for (a, b), c in sorted(self.colours.items())},
            "component_sizes": self.component_sizes(),
            "rainbow_triangles": [list(t) for t in self.rainbow],
            "overloaded_vertices": {str(v): list(cs) for v, cs in sorted(self.overloaded.items())},
            "gallai": self.gallai,
            "locally_two": self.locally_two,
            "case": self.case,
            "checks": self.checks,
        }


def monochromatic_components(n: int, colours: dict[Pair, int]) -> list[ColourComponent]:
    """Components of every colour class, largest first (ties: colour, then
    smallest vertex)."""
    by_colour: dict[int, list[Pair]] = {}
    for pair, c in colours.items():
        by_colour.setdefault(c, []).append(pair)
    out = []
    for c, pairs in by_colour.items():
        g = _pair_graph(n, pairs)
        for comp in components(g):
            keep = set(comp)
            out.append(ColourComponent(c, tuple(comp), tuple(sorted(p for p in pairs if p[0] in keep))))
    out.sort(key=lambda h: (-len(h.vertices), h.colour, h.vertices[0]))
    return out


def analyse_colouring(n: int, colours: dict[Pair, int], alpha=0, isolated: Iterable[int] = ()) -> ColouringAnalysis:
    """Rainbow triangles, colours per vertex, monochromatic components and the
    size conclusions expected of a Gallai locally 2-edge-colouring."""
    alpha = Fraction(alpha)
    colours = {canon(p): c for p, c in colours.items()}
    at: dict[int, set[int]] = {}
    adjacency: dict[int, set[int]] = {}
    for (a, b), c in colours.items():
        at.setdefault(a, set()).add(c)
        at.setdefault(b, set()).add(c)
        adjacency.setdefault(a, set()).add(b)
        adjacency.setdefault(b, set()).add(a)
    rainbow = []
    for a in sorted(adjacency):
        for b in sorted(x for x in adjacency[a] if x > a):
            for c in sorted(x for x in adjacency[a] & adjacency[b] if x > b):
                if len({colours[(a, b)], colours[(a, c)], colours[(b, c)]}) == 3:
                    rainbow.append((a, b, c))
    overloaded = {v: tuple(sorted(cs)) for v, cs in at.items() if len(cs) > 2}
    comps = monochromatic_components(n, colours)
    span = set(adjacency) - set(isolated)
    h = [set(c.vertices) for c in comps]
    spanning = bool(h) and h[0] >= span
    checks: dict[str, bool | None] = {}
    if h:
        rest_disjoint = all(not (h[i] & h[j]) for i in range(1, len(h)) for j in range(i + 1, len(h)))
        second = len(h[1]) if len(h) > 1 else 0
        union_two = (h[0] | (h[1] if len(h) > 1 else set())) >= span
        small_tail = all(2 * len(x) <= n for x in h[2:])
        checks["g1"] = (rest_disjoint and len(h[0]) == n) if spanning else None
        checks["g2"] = None if spanning else (second >= (1 - 2 * alpha) * n and union_two)
        checks["g3"] = len(h[0]) >= (1 - 2 * alpha) * n and small_tail
        checks["c1"] = (rest_disjoint and len(h[0]) >= (1 - alpha) * n) if spanning else None
        checks["c2"] = None if spanning else (second >= (1 - 3 * alpha) * n and union_two)
        checks["c3"] = len(h[0]) >= (1 - 3 * alpha) * n and small_tail
    return ColouringAnalysis(n, colours, comps, rainbow, overloaded, spanning, checks)


@dataclass
class VertexColouring:
    classes: list[tuple[int, ...]]
    transitive: bool

    @property
    def two_coloured(self) -> bool:
        return len(self.classes) <= 2

    def colour_of(self, v: int) -> int | None:
        for i, cls in enumerate(self.classes):
            if v in cls:
                return i
        return None

    def to_json(self) -> dict:
        return {
            "classes": [list(c) for c in self.classes],
            "two_coloured": self.two_coloured,
            "relation_transitive": self.transitive,
        }


def _colour_by_shared_class(items: Sequence, label_sets: dict, reach: EdgeReach) -> tuple[dict, bool]:
    """Union items whose label edge sets meet a common mutual-reachability class.

    Returns the colour of every item and whether the raw relation was already
    transitive.
    """
    cls = reach.classes()
    tags = {x: frozenset(cls[e] for e in label_sets[x] if e in cls) for x in items}
    uf = _UnionFind(items)
    by_tag: dict[int, list] = {}
    for x in items:
        for t in tags[x]:
            by_tag.setdefault(t, []).append(x)
    for members in by_tag.values():
        for other in members[1:]:
            uf.union(members[0], other)
    roots = sorted({uf.find(x) for x in items})
    colour_of_root = {r: i for i, r in enumerate(roots)}
    colour = {x: colour_of_root[uf.find(x)] for x in items}
    transitive = all(
        bool(tags[a] & tags[b]) == (colour[a] == colour[b]) for a, b in combinations(items, 2)
    )
    return colour, transitive


# -- labels ----------------------------------------------------------------------------


@dataclass
class LabelLevel:
    subset: Edge
    case: str
    K: Hypergraph
    plus: frozenset[Edge]
    minus: frozenset[Edge]
    colouring: ColouringAnalysis | None = None
    phi_transitive: bool | None = None
    notes: list[str] = field(default_factory=list)

    def to_json(self) -> dict:
        out = {
            "subset": list(self.subset),
            "case": self.case,
            "K_vertices": sorted({v for e in self.K.edges for v in e}),
            "K_edges": _edges_json(self.K.edges),
            "plus": _edges_json(self.plus),
            "minus": _edges_json(self.minus),
            "notes": self.notes,
        }
        if self.colouring is not None:
            out["colouring"] = self.colouring.to_json()
            out["phi_transitive"] = self.phi_transitive
        return out


@dataclass
class LabelStructure:
    k: int
    n: int
    alpha: Fraction
    family: list[Edge]
    levels: dict[Edge, LabelLevel]
    anomalies: list[str]

    def K(self, subset: Iterable[int]) -> Hypergraph | None:
        level = self.levels.get(canon(subset))
        return None if level is None else level.K

    def plus(self, subset: Iterable[int]) -> frozenset[Edge]:
        level = self.levels.get(canon(subset))
        return frozenset() if level is None else level.plus

    def minus(self, subset: Iterable[int]) -> frozenset[Edge]:
        level = self.levels.get(canon(subset))
        return frozenset() if level is None else level.minus

    def upward_closed(self) -> bool:
        present = set(self.family)
        return all(
            canon(a + pair) in present
            for a in self.family
            for pair in self.levels[a].K.edges
            if len(a) + 2 <= self.k - 2
        )

    def to_json(self) -> dict:
        return {
            "k": self.k,
            "n": self.n,
            "alpha": str(self.alpha),
            "levels": [self.levels[a].to_json() for a in self.family],
            "anomalies": self.anomalies,
        }


def label_family(graph: Hypergraph) -> list[Edge]:
    """Shadow sets with |A| of the parity of k and |A| <= k-2, largest first."""
    k = graph.k
    out: list[Edge] = []
    for s in range(k - 2, -1, -2):
        out.extend(sorted(shadow_sets(graph, s)))
    return out


def _pair_splits(rest: Edge):
    """Every sequence of disjoint pairs covering ``rest`` (order of pairs matters)."""
    if not rest:
        yield ()
        return
    for pair in combinations(rest, 2):
        remaining = _minus(rest, pair)
        for tail in _pair_splits(remaining):
            yield (pair,) + tail


def classify_edge(edge: Edge, subset: Edge, K: dict[Edge, Hypergraph]) -> tuple[bool, bool]:
    """(is A-label, is non-A-label) by trying every vertex ordering of e - A."""
    label = nonlabel = False
    for split in _pair_splits(_minus(edge, subset)):
        prefix = subset
        good = True
        for pair in split:
            kp = K.get(prefix)
            if kp is None or pair not in kp.edges:
                good = False
                break
            prefix = canon(prefix + pair)
        if good:
            label = True
        else:
            nonlabel = True
        if label and nonlabel:
            break
    return label, nonlabel


def build_labels(graph: Hypergraph, robust: RobustSubgraph | None = None, alpha=0,
                 reach: EdgeReach | None = None) -> LabelStructure:
    """Pair graphs K_A and label sets E_A^+ / E_A^- for every A in the family."""
    k, n = graph.k, graph.n
    if k < 3:
        raise ParameterError("labels need k >= 3")
    alpha = Fraction(alpha)
    robust = robust or build_gstar(graph)
    reach = reach or EdgeReach(robust.gstar)
    family = label_family(graph)
    K: dict[Edge, Hypergraph] = {}
    levels: dict[Edge, LabelLevel] = {}
    anomalies: list[str] = []
    for a in family:
        ea = robust.edge_set(a)
        shadow2 = _pair_graph(n, link_shadow_pairs(graph, a))
        notes: list[str] = []
        colouring = None
        transitive = None
        if len(a) == k - 2:
            case = "base"
            K[a] = shadow2
        else:
            cls = reach.classes()
            if len({cls[e] for e in ea}) <= 1:
                case = "case1"
                K[a] = shadow2
            else:
                case = "case2"
                pairs = shadow2.sorted_edges()
                labels = {p: levels[canon(a + p)].plus if canon(a + p) in levels else frozenset() for p in pairs}
                colour, transitive = _colour_by_shared_class(pairs, labels, reach)
                colouring = analyse_colouring(n, colour, alpha, isolated=())
                comps = colouring.components
                if not transitive:
                    notes.append("pair relation was not transitive; colours use its closure")
                if not colouring.gallai:
                    notes.append(f"rainbow triangles: {len(colouring.rainbow)}")
                if not colouring.locally_two:
                    notes.append(f"vertices with more than two colours: {sorted(colouring.overloaded)}")
                if len(comps) < 2:
                    notes.append("only one monochromatic component; K_A set to the whole pair shadow")
                    K[a] = shadow2
                else:
                    keep = set(comps[1].vertices)
                    K[a] = shadow2.induced(keep)
                    size = len(keep)
                    if not (Fraction(1, 2) + 3 * alpha) * n <= size <= (1 - 3 * alpha) * n:
                        notes.append(
                            f"second component has {size} vertices, outside "
                            f"[{(Fraction(1, 2) + 3 * alpha) * n}, {(1 - 3 * alpha) * n}]"
                        )
        if len(a) < k - 2:
            order = len({v for e in K[a].edges for v in e})
            if order < (Fraction(1, 2) + 3 * alpha) * n:
                notes.append(f"K_A has {order} vertices, below {(Fraction(1, 2) + 3 * alpha) * n}")
        plus, minus = set(), set()
        for e in ea:
            is_label, is_nonlabel = classify_edge(e, a, K)
            if is_label:
                plus.add(e)
            if is_nonlabel:
                minus.add(e)
        levels[a] = LabelLevel(a, case, K[a], frozenset(plus), frozenset(minus), colouring, transitive, notes)
        anomalies.extend(f"{list(a)}: {note}" for note in notes)
    structure = LabelStructure(k, n, alpha, family, levels, anomalies)
    for issue in recursion_mismatches(structure, robust):
        anomalies.append(issue)
    return structure


def link_shadow_pairs(graph: Hypergraph, subset: Edge) -> frozenset[Edge]:
    lk = link(graph, subset) if subset else graph
    return shadow_sets(lk, 2)


def recursion_mismatches(labels: LabelStructure, robust: RobustSubgraph) -> list[str]:
    """Compare the label sets with their recursive description and check that
    every edge of E_A is label or non-label."""
    out = []
    for a in labels.family:
        level = labels.levels[a]
        ea = robust.edge_set(a)
        if level.plus | level.minus != ea:
            out.append(f"{list(a)}: E_A^+ and E_A^- do not cover E_A")
        if len(a) == labels.k - 2:
            continue
        rec_plus: set[Edge] = set()
        rec_minus: set[Edge] = set()
        for pair in link_shadow_pairs(robust.base, a):
            sub = canon(a + pair)
            if pair in level.K.edges:
                rec_plus |= labels.plus(sub)
                rec_minus |= labels.minus(sub)
            else:
                rec_minus |= robust.edge_set(sub)
        if rec_plus != level.plus:
            out.append(f"{list(a)}: E_A^+ differs from the union over K_A by {len(rec_plus ^ level.plus)} edges")
        if rec_minus != level.minus:
            out.append(f"{list(a)}: E_A^- differs from its recursive description by {len(rec_minus ^ level.minus)} edges")
    return out


def vertex_colouring(labels: LabelStructure, robust: RobustSubgraph, reach: EdgeReach) -> VertexColouring:
    """For odd k: non-isolated vertices, joined when their label edges meet a
    common mutual-reachability class."""
    base = robust.base
    vertices = [v for v in base.vertices if base.edges_at(v)]
    sets = {v: labels.plus((v,)) for v in vertices}
    colour, transitive = _colour_by_shared_class(vertices, sets, reach)
    groups: dict[int, list[int]] = {}
    for v in vertices:
        groups.setdefault(colour[v], []).append(v)
    classes = sorted((tuple(g) for g in groups.values()), key=lambda g: (-len(g), g[0]))
    return VertexColouring(classes, transitive)


def common_set(labels: LabelStructure, subsets: Sequence[Iterable[int]], size: int) -> tuple[Pair, ...] | None:
    """Pairs x1y1, ..., x_i y_i with each pair in every K_{A_s + earlier pairs}.

    Depth-first search over the intersections; returns None when none exists.
    """
    bases = [canon(s) for s in subsets]

    def search(chosen: tuple[Pair, ...]) -> tuple[Pair, ...] | None:
        if len(chosen) == size:
            return chosen
        used = {v for p in chosen for v in p}
        extra = tuple(v for p in chosen for v in p)
        pools = []
        for a in bases:
            kk = labels.K(canon(a + extra))
            if kk is None:
                return None
            pools.append(kk.edges)
        common = set.intersection(*(set(p) for p in pools)) if pools else set()
        for pair in sorted(common):
            if used & set(pair) or any(set(pair) & set(a) for a in bases):
                continue
            found = search(chosen + (pair,))
            if found is not None:
                return found
        return None

    return search(())


# -- enumeration -------------------------------------------------------------------------


@dataclass
class EnumerationResult:
    order: list[Edge]
    method: str
    valid: bool
    label_order_valid: bool
    radius: float
    witness: tuple[Edge, Edge] | None
    blocks: list[int]
    notes: list[str]

    def to_json(self) -> dict:
        return {
            "order": _edges_json_ordered(self.order),
            "method": self.method,
            "valid": self.valid,
            "label_order_valid": self.label_order_valid,
            "radius": None if self.radius == INFINITY else self.radius,
            "witness": None if self.witness is None else [list(e) for e in self.witness],
            "blocks": self.blocks,
            "notes": self.notes,
        }


def _edges_json_ordered(edges: Sequence[Edge]) -> list[list[int]]:
    return [list(e) for e in edges]


def check_enumeration(order: Sequence[Edge], reach: EdgeReach) -> tuple[bool, tuple[Edge, Edge] | None]:
    """Every later edge must be reachable from every earlier one."""
    for i, e in enumerate(order):
        for f in order[i + 1 :]:
            if not reach.reaches(e, f):
                return False, (e, f)
    return True, None


def enumeration_radius(order: Sequence[Edge], reach: EdgeReach) -> float:
    worst: float = 0
    for i, e in enumerate(order):
        for f in order[i:]:
            worst = max(worst, reach.radius(e, f))
    return worst


def label_order(labels: LabelStructure, robust: RobustSubgraph, reach: EdgeReach) -> tuple[list[Edge], list[int], list[str]]:
    """Blocks: label edges first, then the rest (even k); for odd k the label
    edges of the larger vertex class, then the other class, then the rest."""
    every = robust.edge_set(())
    notes: list[str] = []
    if labels.k % 2 == 0:
        first = labels.plus(())
        blocks = [sorted(first), sorted(every - first)]
    else:
        psi = vertex_colouring(labels, robust, reach)
        if not psi.two_coloured:
            notes.append(f"vertex colouring has {len(psi.classes)} classes")
        if not psi.transitive:
            notes.append("vertex relation was not transitive; classes use its closure")
        b = [set().union(*(labels.plus((v,)) for v in cls)) for cls in psi.classes[:2]]
        while len(b) < 2:
            b.append(set())
        blocks = [sorted(b[0]), sorted(b[1] - b[0]), sorted(every - b[0] - b[1])]
    order = [e for block in blocks for e in block]
    return order, [len(block) for block in blocks], notes


def condensation_order(reach: EdgeReach) -> list[Edge]:
    """Mutual-reachability classes sorted so that classes reaching more edges
    come first."""
    counts = {}
    for e in reach.edges:
        counts[e] = sum(1 for f in reach.edges if reach.reaches(e, f))
    return sorted(reach.edges, key=lambda e: (-counts[e], reach.classes()[e], e))


def build_enumeration(labels: LabelStructure, robust: RobustSubgraph, reach: EdgeReach | None = None) -> EnumerationResult:
    reach = reach or EdgeReach(robust.gstar)
    order, blocks, notes = label_order(labels, robust, reach)
    label_ok, label_witness = check_enumeration(order, reach)
    fallback = condensation_order(reach)
    fallback_ok, _ = check_enumeration(fallback, reach)
    if label_ok:
        if not fallback_ok:
            notes.append("condensation order failed although the label order verified")
        return EnumerationResult(order, "labels", True, True, enumeration_radius(order, reach), None, blocks, notes)
    notes.append(f"label order fails at {list(label_witness[0])} -> {list(label_witness[1])}")
    if fallback_ok:
        return EnumerationResult(fallback, "condensation", True, False, enumeration_radius(fallback, reach), None, blocks, notes)
    witness = reach.incomparable_pair() or label_witness
    return EnumerationResult(order, "labels", False, False, INFINITY, witness, blocks, notes)


# -- rotatability -----------------------------------------------------------------------------


@dataclass
class EdgeRotation:
    edge: Edge
    radius: float | None
    method: str
    chain_radius: float | None
    consistent: bool

    def to_json(self) -> dict:
        fix = lambda r: None if r is None or r == INFINITY else r  # noqa: E731
        return {
            "edge": list(self.edge),
            "radius": fix(self.radius),
            "method": self.method,
            "chain_radius": fix(self.chain_radius),
            "consistent": self.consistent,
        }


@dataclass
class RotationReport:
    edges: list[EdgeRotation]

    @property
    def radius(self) -> float | None:
        rs = [r.radius for r in self.edges]
        if any(r is None for r in rs):
            return None
        return max(rs, default=0)

    @property
    def all_rotatable(self) -> bool:
        return all(r.radius is not None and r.radius != INFINITY for r in self.edges)

    @property
    def partial(self) -> bool:
        return any(r.radius is None for r in self.edges)

    @property
    def consistent(self) -> bool:
        return all(r.consistent for r in self.edges)

    def to_json(self) -> dict:
        r = self.radius
        return {
            "radius": None if r is None or r == INFINITY else r,
            "all_rotatable": self.all_rotatable,
            "partial": self.partial,
            "consistent": self.consistent,
            "per_edge": [e.to_json() for e in self.edges],
        }


def _star_radii(solver: RotationSolver, k: int) -> dict[Perm, float | None]:
    return {sigma: solver.radius("star", sigma) for sigma in all_perms(k)}


def tight_vertex_walk(graph: Hypergraph, start: Sequence[int], target: Iterable[int],
                      state_limit: int = 200000) -> list[int] | None:
    """Shortest vertex sequence whose k-windows are edges, starting with the
    ordered edge ``start`` and ending with some ordering of ``target``, of
    length a multiple of k."""
    k = graph.k
    goal = frozenset(target)
    first = tuple(start)
    seen = {(first, 0): None}
    queue = deque([(first, 0)])
    while queue:
        state = queue.popleft()
        window, phase = state
        if phase == 0 and frozenset(window) == goal:
            walk = []
            cur = state
            while cur is not None:
                walk.append(cur[0][-1])
                cur = seen[cur]
            walk.reverse()
            return list(first[:-1]) + walk
        base = window[1:]
        for f in graph.edges_at(base[0]) if base else graph.edges:
            if not set(base) <= set(f):
                continue
            (x,) = set(f) - set(base)
            nxt = (base + (x,), (phase + 1) % k)
            if nxt not in seen:
                if len(seen) >= state_limit:
                    return None
                seen[nxt] = state
                queue.append(nxt)
    return None


def build_rotatability(gstar: Hypergraph, cap: int | None = None, transfers: bool = True) -> RotationReport:
    """Per-edge rotation radius from the dynamic programme, with an independent
    certificate chain alongside.

    In every tight component the first edge gets star witnesses for the
    transpositions (1 i) and their closure; the other edges receive the
    closure by transfer along a tight walk.  The chain only ever claims upper
    bounds, so each claimed radius must be at least the programme's.
    """
    k = gstar.k
    report = []
    anchors: dict[Edge, dict[Perm, float]] = {}
    anchor_of: dict[Edge, Edge] = {}
    for comp in tight_components(gstar):
        first = min(comp)
        for e in comp:
            anchor_of[e] = first
    for e in gstar.sorted_edges():
        solver = RotationSolver(gstar, e, cap)
        full = solver.radius("full", identity(k))
        chain: float | None = None
        method = "dp"
        consistent = True
        anchor = anchor_of[e]
        if anchor == e:
            gens = []
            for i in range(2, k + 1):
                w = rotatability(gstar, e, transposition(1, i, k), mode="star", solver=solver)
                if w:
                    gens.append(w)
            try:
                closure = generator_closure(e, gens)
                anchors[e] = closure.per_sigma
                chain = max(closure.per_sigma.values())
                method = "closure"
                star = _star_radii(solver, k)
                consistent = all(star[s] is not None and star[s] <= r for s, r in closure.per_sigma.items())
            except ClosureError:
                pass
        elif transfers and anchor in anchors:
            walk = tight_vertex_walk(gstar, anchor, e)
            if walk is not None:
                ell = len(walk) // k
                tail = tuple(walk[-k:])
                rho_f = tuple(e.index(v) + 1 for v in tail)
                rho = inverse(rho_f)  # rho_e is the identity
                claimed = {
                    compose(inverse(rho), sigma): transfer_radius(k, r, ell)
                    for sigma, r in anchors[anchor].items()
                }
                chain = max(claimed.values())
                method = "transfer"
                star = _star_radii(solver, k)
                consistent = all(star[s] is not None and star[s] <= r for s, r in claimed.items())
        if chain is not None and full not in (None, INFINITY) and chain < full:
            consistent = False
        report.append(EdgeRotation(e, full, method, chain, consistent))
    return RotationReport(report)


def many_mon(graph: Hypergraph, u: int, robust: RobustSubgraph | None = None) -> tuple[int | None, int]:
    """For a 4-graph: the vertex w maximising the number of v whose link
    components C_uv share an edge with C_uw, and that number."""
    if graph.k != 4:
        raise ParameterError("the shared-component count is defined for 4-graphs")
    robust = robust or build_gstar(graph)
    comp = {a: c.edges for a, c in robust.components.items()}
    best, best_count = None, -1
    for w in graph.vertices:
        cw = comp.get(canon((u, w)))
        if cw is None:
            continue
        count = sum(
            1 for v in graph.vertices if comp.get(canon((u, v))) is not None and cw & comp[canon((u, v))]
        )
        if count > best_count:
            best, best_count = w, count
    return best, max(best_count, 0)


# -- (R1) ------------------------------------------------------------------------------------


@dataclass
class MatchingEvidence:
    exact: bool
    checked: int
    failures: list[dict]
    extreme_points: int | None
    samples: int
    trace_ok: bool | None

    @property
    def holds(self) -> bool:
        return not self.failures

    def to_json(self) -> dict:
        return {
            "exact": self.exact,
            "checked": self.checked,
            "failures": self.failures,
            "extreme_points": self.extreme_points,
            "samples": self.samples,
            "trace_ok": self.trace_ok,
            "holds": self.holds,
        }


def extreme_weightings(graph: Hypergraph, eta) -> Iterable[dict[int, Fraction]]:
    """Vertices of {omega in [0,1]^V : sum >= (1-eta)n, omega = 0 on isolated vertices}.

    Every vertex is 0/1 except for at most one coordinate, which is then
    fractional with the sum exactly (1-eta)n.
    """
    eta = Fraction(eta)
    live = [v for v in graph.vertices if graph.edges_at(v)]
    floor_sum = (1 - eta) * graph.n
    count = len(live)
    for zeros in range(count + 1):
        ones = count - zeros
        for zero_set in combinations(live, zeros):
            if ones >= floor_sum:
                yield {v: Fraction(0 if v in zero_set else 1) if v in live else Fraction(0) for v in graph.vertices}
            frac = floor_sum - (ones - 1)
            if ones >= 1 and 0 < frac < 1:
                for v_frac in (v for v in live if v not in zero_set):
                    omega = {v: Fraction(0) for v in graph.vertices}
                    for v in live:
                        if v not in zero_set:
                            omega[v] = Fraction(1)
                    omega[v_frac] = frac
                    yield omega


def count_extreme_weightings(graph: Hypergraph, eta) -> int:
    eta = Fraction(eta)
    count = sum(1 for v in graph.vertices if graph.edges_at(v))
    floor_sum = (1 - eta) * graph.n
    total = 0
    for zeros in range(count + 1):
        ones = count - zeros
        if ones >= floor_sum:
            total += comb(count, zeros)
        frac = floor_sum - (ones - 1)
        if ones >= 1 and 0 < frac < 1:
            total += comb(count, zeros) * ones
    return total


def random_weighting(graph: Hypergraph, eta, rng: random.Random, denominator: int = 12) -> dict[int, Fraction] | None:
    eta = Fraction(eta)
    live = [v for v in graph.vertices if graph.edges_at(v)]
    need = (1 - eta) * graph.n
    if len(live) < need:
        return None
    omega = {v: Fraction(0) for v in graph.vertices}
    for v in live:
        omega[v] = Fraction(rng.randint(0, denominator), denominator)
    # raise weights until the sum is large enough
    order = live[:]
    rng.shuffle(order)
    for v in order:
        total = sum(omega.values())
        if total >= need:
            break
        omega[v] = min(Fraction(1), omega[v] + (need - total))
    return omega


def check_matching_property(gstar: Hypergraph, eta, samples: int = 20, seed: int = 0,
                            extreme_limit: int = 3000, trace: bool = True) -> MatchingEvidence:
    """Perfect omega-fractional matchings for every admissible omega.

    The admissible weightings form a polytope and the weightings with a
    perfect fractional matching form a convex cone, so checking the polytope's
    vertices is exact.  Random interior samples are checked as well.
    """
    eta = Fraction(eta)
    failures: list[dict] = []
    checked = 0
    points = count_extreme_weightings(gstar, eta)
    exact = points <= extreme_limit

    def test(omega, kind):
        nonlocal checked
        checked += 1
        best = max_fractional_matching(gstar, omega)
        if best.size != perfect_size(gstar, omega):
            failures.append({
                "kind": kind,
                "omega": {str(v): str(w) for v, w in omega.items() if w},
                "best": str(best.size),
                "needed": str(perfect_size(gstar, omega)),
            })

    if exact:
        for omega in extreme_weightings(gstar, eta):
            test(omega, "extreme")
            if len(failures) >= 5:
                break
    rng = random.Random(seed)
    drawn = 0
    for _ in range(samples):
        omega = random_weighting(gstar, eta, rng)
        if omega is None:
            break
        drawn += 1
        test(omega, "sample")
    trace_ok = None
    if trace and gstar.edges:
        live = {v: Fraction(1) if gstar.edges_at(v) else Fraction(0) for v in gstar.vertices}
        steps = induction_trace(gstar, live, levels=[0])
        trace_ok = all(s.ok for s in steps)
    return MatchingEvidence(exact, checked, failures, points if exact else None, drawn, trace_ok)


# -- certificate --------------------------------------------------------------------------------


@dataclass
class RobustCertificate:
    eta: Fraction
    status: str
    enumeration: EnumerationResult | None
    C1: float | None
    C2: float | None
    rotation: RotationReport | None
    matching: MatchingEvidence | None
    witness: dict | None
    notes: list[str]

    def to_json(self) -> dict:
        fix = lambda r: None if r is None or r == INFINITY else r  # noqa: E731
        return {
            "eta": str(self.eta),
            "status": self.status,
            "enumeration": None if self.enumeration is None else _edges_json_ordered(self.enumeration.order),
            "enumeration_detail": None if self.enumeration is None else self.enumeration.to_json(),
            "C1": fix(self.C1),
            "C2": fix(self.C2),
            "per_edge_rotation": None if self.rotation is None else self.rotation.to_json()["per_edge"],
            "r1_evidence": None if self.matching is None else self.matching.to_json(),
            "witness": self.witness,
            "notes": self.notes,
        }


def certify_robust(graph: Hypergraph, eta, samples: int = 20, seed: int = 0, alpha=0,
                   cap: int | None = None, robust: RobustSubgraph | None = None,
                   check_rotation: bool = True) -> RobustCertificate:
    """Build G* and check (R1) matchings, (R2) enumeration, (R3) rotation on it."""
    eta = Fraction(eta)
    robust = robust or build_gstar(graph)
    gstar = robust.gstar
    notes: list[str] = []
    if robust.ties:
        notes.append(f"largest link component tied for {len(robust.ties)} sets")
    if not gstar.edges:
        return RobustCertificate(eta, "refuted", None, None, None, None, None,
                                 {"R1": {"reason": "G* has no edges"}}, notes)
    matching = check_matching_property(gstar, eta, samples, seed)
    reach = EdgeReach(gstar)
    labels = build_labels(graph, robust, alpha, reach)
    notes.extend(labels.anomalies)
    enum = build_enumeration(labels, robust, reach)
    notes.extend(enum.notes)
    rotation = build_rotatability(gstar, cap) if check_rotation else None
    refutations: dict[str, dict] = {}
    if not matching.holds:
        refutations["R1"] = {"omega": matching.failures[0]}
    if not enum.valid:
        e, f = enum.witness
        refutations["R2"] = {
            "pair": [list(e), list(f)],
            "reason": "neither edge is reachable from the other"
            if not reach.reaches(f, e) else "second edge unreachable from the first",
        }
    if rotation is not None and not rotation.all_rotatable and not rotation.partial:
        bad = [list(r.edge) for r in rotation.edges if r.radius == INFINITY]
        refutations["R3"] = {"edges": bad[:10], "count": len(bad)}
    if refutations:
        status = "refuted"
    elif rotation is None or rotation.partial or not matching.exact:
        status = "partial"
    else:
        status = "certified"
    witness = refutations or None
    c2 = None if rotation is None else rotation.radius
    return RobustCertificate(eta, status, enum, enum.radius if enum.valid else None, c2,
                             rotation, matching, witness, notes)
