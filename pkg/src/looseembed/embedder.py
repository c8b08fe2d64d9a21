"""Absorbing tuples, immersion, the assignment plan and spanning embeddings.

Everything runs at desk scale: each vertex is its own cluster, the reduced
graph is G* itself, and the dense-tuple extension becomes a direct search.
``embed_spanning(..., mode="oracle")`` is an exhaustive search that serves as
ground truth for the pipeline.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations, permutations
from typing import Iterable, Iterator, Sequence

from .homomorphism import (
    ParameterError,
    RotationSolver,
    VertexMap,
    balanced_homomorphism,
    reachability,
    verify_map,
)
from .hypercore import Edge, Hypergraph, canon
from .loosetree import LooseTree, TreeEdge, decompose
from .matching import components, max_fractional_matching, perfect_size
from .robustgraph import EdgeReach, build_gstar, check_enumeration, condensation_order


class EmbeddingError(RuntimeError):
    """A pipeline stage could not finish; ``witness`` says why."""

    def __init__(self, stage: str, message: str, witness: dict | None = None):
        super().__init__(f"{stage}: {message}")
        self.stage = stage
        self.witness = witness or {}


class AbsorptionExhausted(EmbeddingError):
    def __init__(self, message: str, witness: dict | None = None):
        super().__init__("complete", message, witness)


class ImmersionError(EmbeddingError):
    def __init__(self, star_index: int, message: str):
        super().__init__("immerse", message, {"star_index": star_index})
        self.star_index = star_index


class CapacityError(EmbeddingError):
    def __init__(self, message: str, witness: dict | None = None):
        super().__init__("assign", message, witness)


# -- stars and absorbing tuples ------------------------------------------------------


@dataclass(frozen=True)
class Star:
    centre: int
    leaf_sets: tuple[Edge, ...]

    @property
    def edges(self) -> tuple[Edge, ...]:
        return tuple(canon((self.centre,) + leaves) for leaves in self.leaf_sets)

    @property
    def vertices(self) -> frozenset[int]:
        return frozenset((self.centre,)).union(*self.leaf_sets)

    def with_centre(self, centre: int) -> "Star":
        return Star(centre, self.leaf_sets)

    def valid_in(self, graph: Hypergraph) -> bool:
        seen = {self.centre}
        for leaves in self.leaf_sets:
            if len(leaves) != graph.k - 1 or seen.intersection(leaves):
                return False
            seen.update(leaves)
        return all(graph.has_edge(e) for e in self.edges)

    def to_json(self) -> dict:
        return {"centre": self.centre, "leaf_sets": [list(s) for s in self.leaf_sets]}


@dataclass(frozen=True)
class AbsorbingTuple:
    target: tuple[int, ...]
    stars: tuple[Star, ...]

    @property
    def centres(self) -> tuple[int, ...]:
        return tuple(s.centre for s in self.stars)

    @property
    def base_edge(self) -> Edge:
        return canon((self.target[0],) + self.centres)

    @property
    def vertices(self) -> frozenset[int]:
        return frozenset().union(*(s.vertices for s in self.stars))

    def to_json(self) -> dict:
        return {
            "target": list(self.target),
            "base_edge": list(self.base_edge),
            "stars": [s.to_json() for s in self.stars],
        }


def absorbs(graph: Hypergraph, stars: Sequence[Star], target: Sequence[int]) -> bool:
    """Definitional check that ``stars`` form an absorbing tuple for ``target``."""
    k = graph.k
    if len(target) != k or len(set(target)) != k or len(stars) != k - 1:
        return False
    seen: set[int] = set()
    for star in stars:
        if seen.intersection(star.vertices) or not star.valid_in(graph):
            return False
        seen.update(star.vertices)
    base = (target[0],) + tuple(s.centre for s in stars)
    if len(set(base)) != k or not graph.has_edge(base):
        return False
    for w, star in zip(target[1:], stars):
        swapped = star.with_centre(w)
        if not swapped.valid_in(graph):
            return False
    return True


class _Neighbourhoods:
    """(k-1)-sets L with L + v an edge, cached per vertex and per pair."""

    def __init__(self, graph: Hypergraph):
        self.sets = {
            v: frozenset(canon(u for u in e if u != v) for e in graph.edges_at(v)) for v in graph.vertices
        }
        self._common: dict[tuple[int, int], list[Edge]] = {}

    def common(self, a: int, b: int) -> list[Edge]:
        key = (a, b) if a < b else (b, a)
        if key not in self._common:
            self._common[key] = sorted(self.sets[a] & self.sets[b])
        return self._common[key]


def _build_tuple(graph: Hypergraph, nbhd: _Neighbourhoods, target: Sequence[int], sizes: Sequence[int],
                 blocked: Iterable[int], base_limit: int = 200,
                 anchors: Sequence[int | None] | None = None) -> AbsorbingTuple | None:
    """Greedy construction: a base edge through w_1, then sizes[i] disjoint
    common neighbours of each pair (w_i, v_i).

    ``anchors[i]``, when set, must lie in the first leaf set of star i.
    """
    blocked = set(blocked) | set(target)
    w1, others = target[0], tuple(target[1:])
    anchors = list(anchors) if anchors is not None else [None] * len(others)
    pinned = {a for a in anchors if a is not None}
    tried = 0
    for rest in sorted(nbhd.sets[w1]):
        if blocked.intersection(rest) or pinned.intersection(rest):
            continue
        tried += 1
        if tried > base_limit:
            break
        for centres in permutations(rest):
            used = blocked | set(rest)
            stars = []
            for w, v, d, anchor in zip(others, centres, sizes, anchors):
                leaves = []
                if anchor is not None:
                    first = next((ls for ls in nbhd.common(w, v)
                                  if anchor in ls and used.isdisjoint(set(ls) - {anchor})), None)
                    if first is None:
                        break
                    leaves.append(first)
                    used.update(first)
                for leaf_set in nbhd.common(w, v):
                    if len(leaves) == d:
                        break
                    if used.isdisjoint(leaf_set):
                        leaves.append(leaf_set)
                        used.update(leaf_set)
                        if len(leaves) == d:
                            break
                if len(leaves) < d:
                    break
                stars.append(Star(v, tuple(leaves)))
            if len(stars) == len(others):
                return AbsorbingTuple(tuple(target), tuple(stars))
    return None


@dataclass
class AbsorberFamily:
    tuples: list[AbsorbingTuple]
    d: int | tuple[int, ...]
    p: int
    counts: dict[tuple[int, ...], int]
    uncovered: list[tuple[int, ...]]

    @property
    def complete(self) -> bool:
        return not self.uncovered

    @property
    def vertices(self) -> frozenset[int]:
        return frozenset().union(*(t.vertices for t in self.tuples)) if self.tuples else frozenset()

    def shortfall(self, target: Sequence[int]) -> int:
        return max(0, self.p - self.counts.get(tuple(target), 0))

    def to_json(self, limit: int = 20) -> dict:
        return {
            "d": self.d,
            "p": self.p,
            "tuples": [t.to_json() for t in self.tuples],
            "targets": len(self.counts),
            "uncovered_count": len(self.uncovered),
            "uncovered": [list(t) for t in self.uncovered[:limit]],
        }


def _default_targets(n: int, k: int) -> Iterator[tuple[int, ...]]:
    return permutations(range(n), k)


def find_absorbers(graph: Hypergraph, forbidden: Iterable[int] = (), d: int | Sequence[int] = 1, p: int = 1,
                   targets: Iterable[Sequence[int]] | None = None) -> AbsorberFamily:
    """Deterministic round-robin greedy family of vertex-disjoint absorbing tuples.

    With ``targets=None`` every ordered k-tuple of distinct vertices is a
    target, but a target only needs coverage while w_2..w_k avoid the family's
    vertices (those are the tuples the completion step can ask for).  Round r
    visits targets in lexicographic order and builds a tuple for any that still
    has at most r absorbers.
    """
    k = graph.k
    sizes = (d,) * (k - 1) if isinstance(d, int) else tuple(d)
    if len(sizes) != k - 1 or min(sizes) < 1 or p < 0:
        raise ParameterError("need k-1 star sizes >= 1 and p >= 0")
    forbidden = set(forbidden)
    explicit = targets is not None
    target_list = sorted(tuple(t) for t in targets) if explicit else list(_default_targets(graph.n, k))
    for t in target_list:
        if len(t) != k or len(set(t)) != k:
            raise ParameterError(f"target {t} is not {k} distinct vertices")
    nbhd = _Neighbourhoods(graph)
    counts = {t: 0 for t in target_list}
    family: list[AbsorbingTuple] = []
    used: set[int] = set()
    dead: set[tuple[int, ...]] = set()

    def needs(t) -> bool:
        return explicit or used.isdisjoint(t[1:])

    for round_ in range(p):
        for t in target_list:
            if counts[t] > round_ or t in dead or not needs(t):
                continue
            built = _build_tuple(graph, nbhd, t, sizes, forbidden | used)
            if built is None:
                dead.add(t)
                continue
            family.append(built)
            used.update(built.vertices)
            for other in target_list:
                if absorbs(graph, built.stars, other):
                    counts[other] += 1
    uncovered = [t for t in target_list if counts[t] < p and needs(t)]
    return AbsorberFamily(family, d, p, counts, uncovered)


# -- constrained backtracking ---------------------------------------------------------


class _NodeLimit(Exception):
    pass


@dataclass
class SearchOutcome:
    assignment: dict[int, int] | None
    nodes: int
    exhausted: bool
    """True when the search space was fully explored, so None means infeasible."""


def _pending_ok(graph: Hypergraph, used: set[int], open_images: set[int], free: Iterable[int]) -> bool:
    """Every free vertex still needs an edge that can bring it into the tree."""
    for u in free:
        for f in graph.edges_at(u):
            inside = [x for x in f if x in used]
            if not inside or (len(inside) == 1 and inside[0] in open_images):
                break
        else:
            return False
    return True


def constrained_embedding(
    graph: Hypergraph,
    tree: LooseTree,
    *,
    fixed: dict[int, int] | None = None,
    forbidden: Iterable[int] = (),
    allowed: dict[frozenset[int], Iterable[Edge]] | None = None,
    reserved: Iterable[int] = (),
    root_candidates: Iterable[int] | None = None,
    node_limit: int = 200_000,
    spanning_prune: bool = False,
) -> SearchOutcome:
    """Backtracking embedding of ``tree`` edge by edge in BFS order.

    ``fixed`` pins tree vertices, ``allowed`` restricts the image of a tree
    edge (keyed by its vertex set) to listed graph edges, and ``reserved``
    graph vertices may only be used by tree vertices whose own constrained
    edges contain them.
    """
    k = graph.k
    fixed = dict(fixed or {})
    if len(set(fixed.values())) < len(fixed):
        return SearchOutcome(None, 0, True)
    fixed_images = set(fixed.values())
    blocked = set(forbidden)
    reserved = set(reserved)
    allowed_sets = {key: frozenset(canon(f) for f in fs) for key, fs in (allowed or {}).items()}
    edges = tree.top_down_edges()
    zone: dict[int, set[int]] = {}
    need: dict[int, list[frozenset[int]]] = {}
    for e in edges:
        fs = allowed_sets.get(frozenset(e))
        if fs is None:
            continue
        span = set().union(*fs) if fs else set()
        zone.setdefault(e[0], set()).update(span)
        need.setdefault(e[0], []).append(frozenset(span))
        for c in e[1:]:
            zone.setdefault(c, set()).update(span)
    leafy = {v for v in tree.vertices if not tree.child_edges(v)}
    # index of the last edge processed below each top vertex
    last_child = {}
    for i, e in enumerate(edges):
        last_child[e[0]] = i

    def admissible(c: int, u: int) -> bool:
        if c in fixed:
            return fixed[c] == u
        if u in fixed_images or u in blocked:
            return False
        if u in reserved and u not in zone.get(c, ()):
            return False
        return all(u in span for span in need.get(c, ()))

    psi: dict[int, int] = {}
    used: set[int] = set()
    nodes = 0

    def place(i: int) -> bool:
        nonlocal nodes
        if i == len(edges):
            return True
        top, *children = edges[i]
        t = psi[top]
        fs = allowed_sets.get(frozenset(edges[i]))
        candidates = graph.edges_at(t) if fs is None else sorted(f for f in fs if t in f)
        symmetric = [j for j, c in enumerate(children) if c in leafy and c not in fixed]
        for f in candidates:
            rest = [u for u in f if u != t]
            if any(u in used for u in rest):
                continue
            for perm in permutations(rest):
                if any(perm[a] > perm[b] for a, b in zip(symmetric, symmetric[1:])):
                    continue
                if not all(admissible(c, u) for c, u in zip(children, perm)):
                    continue
                nodes += 1
                if nodes > node_limit:
                    raise _NodeLimit
                for c, u in zip(children, perm):
                    psi[c] = u
                    used.add(u)
                if spanning_prune:
                    open_images = {psi[v] for v, j in last_child.items() if v in psi and j > i}
                    open_images.update(psi[c] for c in children if c not in leafy)
                    free = [u for u in graph.vertices if u not in used and u not in blocked]
                    if not _pending_ok(graph, used, open_images, free):
                        for c in children:
                            used.discard(psi.pop(c))
                        continue
                if place(i + 1):
                    return True
                for c in children:
                    used.discard(psi.pop(c))
        return False

    root = tree.root
    if root in fixed:
        roots = [fixed[root]]
    elif root_candidates is not None:
        roots = list(root_candidates)
    else:
        roots = list(graph.vertices)
    try:
        for r in roots:
            if not admissible(root, r):
                continue
            psi[root] = r
            used.add(r)
            if place(0):
                assert len(psi) == len(tree)
                return SearchOutcome(dict(psi), nodes, True)
            psi.clear()
            used.clear()
    except _NodeLimit:
        return SearchOutcome(None, nodes, False)
    assert k >= 2
    return SearchOutcome(None, nodes, True)


# -- immersion --------------------------------------------------------------------------


def immersion_host(tree: LooseTree, psi: dict[int, int], star: Star) -> int | None:
    """A tree vertex x with psi(x) = centre whose edges map to distinct star edges."""
    star_edges = set(star.edges)
    for x, image in psi.items():
        if image != star.centre:
            continue
        images = [canon(psi[v] for v in e) for e in tree.edges_at(x)]
        if len(set(images)) == len(images) and star_edges.issuperset(images):
            return x
    return None


@dataclass
class Immersion:
    vmap: VertexMap
    hosts: dict[int, int]
    nodes: int

    def to_json(self) -> dict:
        return {"map": self.vmap.to_json(), "hosts": {str(i): y for i, y in sorted(self.hosts.items())}}


def _host_choices(tree: LooseTree, stars: Sequence[Star], limit: int) -> Iterator[tuple[int, ...]]:
    options = [
        [y for y in tree.vertices if y != tree.root and tree.vertex_degree(y) == len(star.leaf_sets)]
        for star in stars
    ]
    produced = 0

    def rec(i: int, chosen: tuple[int, ...]):
        nonlocal produced
        if produced >= limit:
            return
        if i == len(options):
            produced += 1
            yield chosen
            return
        for y in options[i]:
            if y not in chosen:
                yield from rec(i + 1, chosen + (y,))

    yield from rec(0, ())


def _try_immerse(graph, tree, v_root, stars, forbidden, node_limit, host_limit) -> Immersion | None:
    reserved = set().union(*(s.vertices for s in stars)) if stars else set()
    for hosts in _host_choices(tree, stars, host_limit):
        fixed = {tree.root: v_root}
        allowed = {}
        clash = False
        for y, star in zip(hosts, stars):
            if y in fixed and fixed[y] != star.centre:
                clash = True
            fixed[y] = star.centre
            for e in tree.edges_at(y):
                allowed[frozenset(e)] = star.edges
        if clash:
            continue
        out = constrained_embedding(
            graph, tree, fixed=fixed, forbidden=forbidden, allowed=allowed,
            reserved=reserved, node_limit=node_limit,
        )
        if out.assignment is not None:
            return Immersion(VertexMap(out.assignment, "embedding"), dict(enumerate(hosts)), out.nodes)
    return None


def immerse(graph: Hypergraph, tree: LooseTree, v_root: int, stars: Sequence[Star],
            forbidden: Iterable[int] = (), node_limit: int = 50_000, host_limit: int = 200) -> Immersion:
    """Embed ``tree`` with its root on ``v_root`` so that every star is immersed.

    Each star's centre hosts a tree vertex whose degree equals the star's
    size, and every edge at that vertex lands on its own star edge.
    """
    forbidden = set(forbidden)
    stars = list(stars)
    if v_root in forbidden:
        raise ImmersionError(-1, f"root image {v_root} is forbidden")
    for i, star in enumerate(stars):
        if not star.valid_in(graph):
            raise ImmersionError(i, f"star {i} is not a star of the graph")
        if v_root in star.vertices or forbidden.intersection(star.vertices):
            raise ImmersionError(i, f"star {i} meets the root image or the forbidden set")
    for a, b in combinations(range(len(stars)), 2):
        if stars[a].vertices & stars[b].vertices:
            raise ImmersionError(b, f"stars {a} and {b} share a vertex")
    found = None
    if not stars:
        found = _try_immerse(graph, tree, v_root, stars, forbidden, node_limit, host_limit)
        if found is None:
            raise ImmersionError(-1, "the tree does not embed from the root image")
        return found
    # grow the prefix so a failure names the first star that cannot be added
    for i in range(1, len(stars) + 1):
        found = _try_immerse(graph, tree, v_root, stars[:i], forbidden, node_limit, host_limit)
        if found is None:
            raise ImmersionError(i - 1, f"cannot immerse star {i - 1} together with the earlier ones")
    assert found is not None and verify_map(tree, graph, found.vmap)
    for i, star in enumerate(stars):
        assert immersion_host(tree, found.vmap.assignment, star) is not None
    return found


# -- the assignment plan ---------------------------------------------------------------


@dataclass
class AssignAudit:
    order: list[Edge]
    weights: dict[Edge, Fraction]
    j: list[int]
    pieces: list[int]
    fill: dict[int, int]
    vertex_fill: dict[tuple[int, int], int]
    loads: dict[int, int]
    quota: dict[int, Fraction]
    threshold: Fraction
    params: dict
    steps: list[dict]
    violations: list[str]

    @property
    def monotone(self) -> bool:
        return all(a <= b for a, b in zip(self.j, self.j[1:]))

    @property
    def fill_ok(self) -> bool:
        m, theta = self.params["m"], self.params["theta"]
        return all(
            count <= self.weights.get(self.order[j - 1], 0) * m + theta * theta * m
            for (j, _), count in self.vertex_fill.items()
        )

    @property
    def quota_ok(self) -> bool:
        return all(self.loads.get(v, 0) <= bound for v, bound in self.quota.items())

    @property
    def ok(self) -> bool:
        return self.monotone and self.fill_ok and self.quota_ok

    def to_json(self) -> dict:
        return {
            "j": self.j,
            "pieces": self.pieces,
            "threshold": str(self.threshold),
            "params": {key: str(value) for key, value in sorted(self.params.items())},
            "weights": [[list(e), str(w)] for e, w in sorted(self.weights.items())],
            "fill": {str(j): c for j, c in sorted(self.fill.items())},
            "vertex_fill": [[j, x, c] for (j, x), c in sorted(self.vertex_fill.items())],
            "loads": {str(v): c for v, c in sorted(self.loads.items())},
            "quota": {str(v): str(q) for v, q in sorted(self.quota.items())},
            "monotone": self.monotone,
            "fill_ok": self.fill_ok,
            "quota_ok": self.quota_ok,
            "violations": self.violations,
            "steps": self.steps,
        }


@dataclass
class AssignResult:
    phi: VertexMap
    audit: AssignAudit


def scaled_matching(graph: Hypergraph, omega: dict[int, Fraction], zeta: Fraction) -> dict[Edge, Fraction]:
    """The perfect fractional matching scaled by 1 - 2*zeta, tiny weights dropped."""
    matching = max_fractional_matching(graph, omega)
    if matching.size != perfect_size(graph, omega):
        raise CapacityError(
            f"weighting admits only size {matching.size}, perfect needs {perfect_size(graph, omega)}",
            {"size": str(matching.size)},
        )
    floor = Fraction(1, graph.n ** (graph.k + 1))
    out = {}
    for e, w in matching.weights.items():
        scaled = (1 - 2 * zeta) * w
        if w and scaled >= floor:
            out[e] = scaled
    return out


def _class_targets(piece: LooseTree, edge: Edge, load: dict[int, int], pin_first: int | None) -> tuple[int, ...]:
    """Largest colour class onto the least loaded edge vertex.

    The piece root is already placed, so it does not count towards its class;
    when its image lies on the edge, class 1 is pinned there.
    """
    k = len(edge)
    sizes = [len([v for v in c if v != piece.root]) for c in piece.colour_classes()]
    slots = sorted(range(k), key=lambda p: (load.get(edge[p], 0), p))
    targets = [0] * k
    classes = sorted(range(k), key=lambda c: (-sizes[c], c))
    if pin_first is not None:
        targets[0] = pin_first + 1
        slots.remove(pin_first)
        classes.remove(0)
    for c, p in zip(classes, slots):
        targets[c] = p + 1
    return tuple(targets)


def assign(
    robust: Hypergraph,
    omega: dict[int, Fraction] | None,
    tree: LooseTree,
    v1: int | None = None,
    e1: Sequence[int] | None = None,
    *,
    m: int,
    zeta: Fraction = Fraction(1, 20),
    theta: Fraction = Fraction(1, 100),
    xi: Fraction | None = None,
    order: Sequence[Edge] | None = None,
    delta: int | None = None,
) -> AssignResult:
    """Homomorphism of ``tree`` into ``robust`` that fills matching edges in order.

    ``omega`` defaults to 1 on every non-isolated vertex.  Without ``xi`` the
    piece scale is 1/(16 k Delta t), which puts the fill threshold at 1/8.
    """
    k, t = robust.k, robust.n
    if omega is None:
        isolated = set(robust.isolated_vertices())
        omega = {v: Fraction(0 if v in isolated else 1) for v in robust.vertices}
    omega = {v: Fraction(omega.get(v, 0)) for v in robust.vertices}
    delta = tree.max_degree() if delta is None else delta
    xi = Fraction(1, 16 * k * delta * t) if xi is None else Fraction(xi)
    zeta, theta = Fraction(zeta), Fraction(theta)
    weights = scaled_matching(robust, omega, zeta)
    reach_index = EdgeReach(robust)
    if order is None:
        order = condensation_order(reach_index)
    order = [canon(e) for e in order]
    if e1 is None:
        support = sorted(weights, key=lambda e: (-weights[e], e))
        if v1 is not None:
            support = [e for e in support if v1 in e] or [e for e in order if v1 in e]
        if not support:
            raise ParameterError("no edge available for the root")
        e1 = support[0]
    e1 = canon(e1)
    if v1 is None:
        v1 = e1[0]
    if v1 not in e1 or e1 not in robust.edges:
        raise ParameterError(f"root image {v1} must lie in the edge {e1} of R")
    order = [e1] + [e for e in order if e != e1]
    valid, witness = check_enumeration(order, reach_index)
    if not valid:
        raise ParameterError(f"enumeration starting at {e1} fails: {witness[0]} does not reach {witness[1]}")

    threshold = 2 * k * delta * xi * t
    target = max(1, int(xi * t * m))
    parts = decompose(tree, target, delta)
    reaches = {}
    solvers = {}
    phi: dict[int, int] = {}
    fill: dict[int, int] = {}
    vertex_fill: dict[tuple[int, int], int] = {}
    js: list[int] = []
    steps: list[dict] = []

    def slack(j: int) -> Fraction:
        return weights.get(order[j - 1], Fraction(0)) - Fraction(fill.get(j, 0), k * m)

    for i, piece in enumerate(parts.pieces):
        if i == 0:
            j = 1
            source = v1
        else:
            j = next((jj for jj in range(1, len(order) + 1) if slack(jj) >= threshold), None)
            if j is None:
                placed = sum(len(p) for p in parts.pieces[:i])
                total = sum(weights.values(), Fraction(0))
                raise CapacityError(
                    f"no edge has slack {threshold} before piece {i + 1}: "
                    f"placed {placed} vertices, k*m*sum(w') = {k * m * total}, "
                    f"slack sum = {sum((slack(jj) for jj in range(1, len(order) + 1)), Fraction(0))}",
                    {"piece": i + 1, "placed": placed, "capacity": str(k * m * total), "threshold": str(threshold)},
                )
            source = phi[piece.root]
        edge = order[j - 1]
        if edge not in reaches:
            reaches[edge] = reachability(robust, edge)
            solvers[edge] = RotationSolver(robust, edge)
        load = {x: vertex_fill.get((j, x), 0) for x in edge}
        pin = edge.index(source) if source in edge else None
        targets = _class_targets(piece, edge, load, pin)
        try:
            part, report = balanced_homomorphism(piece, robust, source, edge, reaches[edge], solvers[edge], targets)
        except ParameterError as exc:
            raise EmbeddingError("assign", str(exc), {"piece": i + 1, "edge": list(edge)}) from exc
        for v, image in part.assignment.items():
            if v in phi and phi[v] != image:
                raise AssertionError(f"piece {i + 1} disagrees on its root")
            phi[v] = image
        steps.append({"piece": i + 1, "size": len(piece), "j": j, "slack_before": str(slack(j)),
                      "unpinned": list(report.unpinned_per_class), "within_bound": report.within_bound})
        js.append(j)
        # vertices placed by this piece; a later piece's root belongs to an earlier one
        fresh = [v for v in piece.vertices if i == 0 or v != piece.root]
        fill[j] = fill.get(j, 0) + len(fresh)
        for v in fresh:
            if phi[v] in edge:
                vertex_fill[(j, phi[v])] = vertex_fill.get((j, phi[v]), 0) + 1

    loads: dict[int, int] = {}
    for v, image in phi.items():
        loads[image] = loads.get(image, 0) + 1
    quota = {v: (1 - zeta) * omega[v] * m for v in robust.vertices}
    violations = []
    for (j, x), count in sorted(vertex_fill.items()):
        bound = weights.get(order[j - 1], Fraction(0)) * m + theta * theta * m
        if count > bound:
            violations.append(f"edge {j} vertex {x}: fill {count} > {bound}")
    for v in robust.vertices:
        if loads.get(v, 0) > quota[v]:
            violations.append(f"vertex {v}: load {loads.get(v, 0)} > quota {quota[v]}")
    audit = AssignAudit(
        order=order, weights=weights, j=js, pieces=[len(p) for p in parts.pieces], fill=fill,
        vertex_fill=vertex_fill, loads=loads, quota=quota, threshold=threshold,
        params={"m": m, "zeta": zeta, "theta": theta, "xi": xi, "delta": delta, "k": k, "t": t},
        steps=steps, violations=violations,
    )
    vmap = VertexMap(phi, "homomorphism")
    verdict = verify_map(tree, robust, vmap)
    if not verdict:
        raise AssertionError(f"assign produced an invalid homomorphism: {verdict.reason}")
    return AssignResult(vmap, audit)


# -- absorption -----------------------------------------------------------------------------


def rooted_tree(k: int, edges: Iterable[Sequence[int]], root: int) -> LooseTree:
    """A LooseTree from edges in any order, listed outward from ``root``."""
    pending = [tuple(e) for e in edges]
    ordered: list[tuple[int, ...]] = []
    seen = {root}
    while pending:
        progress = [e for e in pending if seen.intersection(e)]
        if not progress:
            raise ParameterError("edges do not form a tree containing the root")
        for e in progress:
            ordered.append(e)
            seen.update(e)
        pending = [e for e in pending if e not in progress]
    return LooseTree(k, ordered, root=root)


@dataclass
class PipelineState:
    graph: Hypergraph
    tree: LooseTree
    psi: dict[int, int]
    edges: list[TreeEdge]
    absorbers: list[AbsorbingTuple]
    hosts: dict[int, tuple[int, ...]]
    consumed: set[int] = field(default_factory=set)
    phase: str = "setup"
    log: list[dict] = field(default_factory=list)

    def embedded_tree(self) -> LooseTree:
        return rooted_tree(self.tree.k, self.edges, self.tree.root)

    def free_vertices(self) -> list[int]:
        images = set(self.psi.values())
        return [v for v in self.graph.vertices if v not in images]

    def remaining_edges(self) -> list[TreeEdge]:
        done = {canon(e) for e in self.edges}
        return [e for e in self.tree.top_down_edges() if canon(e) not in done]

    def check(self) -> None:
        """Embedding validity plus immersion of every unused tuple."""
        sub = self.embedded_tree()
        if set(self.psi) != set(sub.vertices):
            raise EmbeddingError(self.phase, "map domain differs from the embedded subtree")
        verdict = verify_map(sub, self.graph, VertexMap(self.psi, "embedding"))
        if not verdict:
            raise EmbeddingError(self.phase, f"invalid embedding: {verdict.reason}")
        for i, tup in enumerate(self.absorbers):
            if i in self.consumed:
                continue
            for y, star in zip(self.hosts[i], tup.stars):
                if self.psi.get(y) != star.centre:
                    raise EmbeddingError(self.phase, f"tuple {i} lost its host {y}")
                images = [canon(self.psi[v] for v in e) for e in self.tree.edges_at(y)]
                if len(set(images)) != len(images) or not set(star.edges).issuperset(images):
                    raise EmbeddingError(self.phase, f"tuple {i} is not immersed at {y}")

    def copy(self) -> "PipelineState":
        return PipelineState(self.graph, self.tree, dict(self.psi), list(self.edges), self.absorbers,
                             dict(self.hosts), set(self.consumed), self.phase, list(self.log))


def extend_by_absorption(state: PipelineState, new_edge: Sequence[int], leftover: Sequence[int] | None = None,
                         tuple_index: int | None = None) -> PipelineState:
    """Add the tree edge x_1..x_k by swapping centres of one immersed tuple.

    x_i takes the old centre v_i and the host of S_{v_i} moves to u_i, where
    u_1 = psi(x_1) and u_2..u_k are free vertices (``leftover`` if given).
    """
    graph = state.graph
    k = graph.k
    x1, *rest = new_edge
    if x1 not in state.psi or any(x in state.psi for x in rest):
        raise ParameterError("the new edge must hang from exactly one embedded vertex")
    if canon(new_edge) not in {canon(e) for e in state.tree.edges}:
        raise ParameterError(f"{tuple(new_edge)} is not an edge of the target tree")
    free = state.free_vertices()
    u1 = state.psi[x1]
    if leftover is not None:
        if len(leftover) != k - 1 or not set(leftover) <= set(free):
            raise ParameterError(f"leftover {leftover} is not k-1 free vertices")
        options = [tuple(leftover)]
    else:
        options = list(permutations(free, k - 1))
    if tuple_index is not None:
        if tuple_index in state.consumed:
            raise AbsorptionExhausted(f"tuple {tuple_index} was already used", {"tuple": tuple_index})
        indices = [tuple_index]
    else:
        indices = [i for i in range(len(state.absorbers)) if i not in state.consumed]
    for us in options:
        target = (u1,) + tuple(us)
        for i in indices:
            tup = state.absorbers[i]
            if not absorbs(graph, tup.stars, target):
                continue
            new = state.copy()
            for x, y, star, u in zip(rest, state.hosts[i], tup.stars, us):
                new.psi[x] = star.centre
                new.psi[y] = u
            new.edges.append(tuple(new_edge))
            new.consumed.add(i)
            new.phase = "complete"
            new.log.append({"edge": list(new_edge), "tuple": i, "target": list(target)})
            new.check()
            return new
    raise AbsorptionExhausted(
        f"no unused tuple absorbs an extension of {tuple(new_edge)}",
        {"edge": list(new_edge), "u1": u1, "unused": indices},
    )


def complete_by_absorption(state: PipelineState) -> PipelineState:
    """Absorb every missing tree edge; the state is returned unchanged when none is missing."""
    current = state
    while True:
        missing = [e for e in current.remaining_edges() if e[0] in current.psi]
        if not missing:
            return current
        current = extend_by_absorption(current, missing[0])


# -- symmetry -----------------------------------------------------------------------------


def _find_automorphism(graph: Hypergraph, start: int, image: int, node_limit: int) -> dict[int, int] | None:
    n = graph.n
    degree = [graph.vertex_degree(v) for v in range(n)]
    pair = [[0] * n for _ in range(n)]
    for e in graph.edges:
        for a, b in combinations(e, 2):
            pair[a][b] += 1
            pair[b][a] += 1
    if degree[start] != degree[image]:
        return None
    order = [start] + [v for v in range(n) if v != start]
    sigma: dict[int, int] = {}
    taken: set[int] = set()
    nodes = 0

    def consistent(a: int, b: int) -> bool:
        if degree[a] != degree[b]:
            return False
        for x, y in sigma.items():
            if pair[a][x] != pair[b][y]:
                return False
        for e in graph.edges_at(a):
            if all(v == a or v in sigma for v in e):
                if not graph.has_edge([b if v == a else sigma[v] for v in e]):
                    return False
        return True

    def rec(i: int) -> bool:
        nonlocal nodes
        if i == n:
            return True
        a = order[i]
        choices = [image] if i == 0 else [b for b in range(n) if b not in taken]
        for b in choices:
            nodes += 1
            if nodes > node_limit:
                raise _NodeLimit
            if consistent(a, b):
                sigma[a] = b
                taken.add(b)
                if rec(i + 1):
                    return True
                del sigma[a]
                taken.discard(b)
        return False

    try:
        return dict(sigma) if rec(0) else None
    except _NodeLimit:
        return None


def vertex_orbits(graph: Hypergraph, max_n: int = 13, node_limit: int = 20_000) -> list[list[int]]:
    """Orbits of the automorphism group, found one automorphism at a time.

    Above ``max_n`` vertices (or when a search runs out of budget) vertices
    stay in separate orbits, which only weakens the pruning.
    """
    n = graph.n
    parent = list(range(n))

    def find(x: int) -> int:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    if n <= max_n:
        for u in range(n):
            for v in range(u + 1, n):
                if find(u) == find(v):
                    continue
                sigma = _find_automorphism(graph, u, v, node_limit)
                if sigma is None:
                    continue
                for a, b in sigma.items():
                    ra, rb = find(a), find(b)
                    if ra != rb:
                        parent[max(ra, rb)] = min(ra, rb)
    groups: dict[int, list[int]] = {}
    for v in range(n):
        groups.setdefault(find(v), []).append(v)
    return sorted(groups.values())


# -- spanning embeddings ------------------------------------------------------------------------


@dataclass
class SpanningResult:
    mode: str
    status: str
    vmap: VertexMap | None
    route: str | None
    stage: str | None = None
    witness: dict = field(default_factory=dict)
    report: dict = field(default_factory=dict)
    timings: dict[str, float] = field(default_factory=dict)

    @property
    def success(self) -> bool:
        return self.status == "embedded"

    def to_json(self) -> dict:
        return {
            "mode": self.mode,
            "status": self.status,
            "route": self.route,
            "stage": self.stage,
            "witness": self.witness,
            "report": self.report,
            "map": None if self.vmap is None else self.vmap.to_json(),
        }


def _size_witness(graph: Hypergraph, tree: LooseTree) -> dict | None:
    if len(tree) != graph.n:
        return {"reason": "size", "tree": len(tree), "graph": graph.n}
    if tree.k != graph.k:
        return {"reason": "uniformity", "tree": tree.k, "graph": graph.k}
    comps = components(graph)
    if len(comps) != 1 or len(comps[0]) != graph.n:
        covered = set().union(*comps) if comps else set()
        isolated = [v for v in graph.vertices if v not in covered]
        return {"reason": "disconnected", "components": [len(c) for c in comps], "isolated": isolated}
    return None


def oracle_embedding(graph: Hypergraph, tree: LooseTree, node_limit: int = 2_000_000) -> SpanningResult:
    started = time.perf_counter()
    witness = _size_witness(graph, tree)
    if witness is not None:
        return SpanningResult("oracle", "failed", None, "oracle", "setup", witness,
                              timings={"total": time.perf_counter() - started})
    orbits = vertex_orbits(graph)
    roots = [orbit[0] for orbit in orbits]
    out = constrained_embedding(graph, tree, root_candidates=roots, node_limit=node_limit, spanning_prune=True)
    timings = {"total": time.perf_counter() - started}
    report = {"orbits": len(orbits), "nodes": out.nodes}
    if out.assignment is not None:
        vmap = VertexMap(out.assignment, "embedding")
        assert verify_map(tree, graph, vmap)
        return SpanningResult("oracle", "embedded", vmap, "oracle", None, {}, report, timings)
    if out.exhausted:
        return SpanningResult("oracle", "failed", None, "oracle", "search",
                              {"reason": "exhausted", "nodes": out.nodes}, report, timings)
    return SpanningResult("oracle", "unknown", None, "oracle", "search",
                          {"reason": "node limit", "nodes": out.nodes}, report, timings)


@dataclass(frozen=True)
class SplitPlan:
    """A leaf edge held back for absorption, the split vertex x and the star hosts.

    ``small`` is T(x) after removing the leaf edge and ``rest`` is what remains
    once T(x) - x is cut away (None when x is the root and nothing remains).
    """

    leaf_edge: TreeEdge
    x: int
    hosts: tuple[int, ...]
    small: LooseTree
    rest: LooseTree | None
    in_window: bool

    @property
    def star_sizes(self) -> tuple[int, ...]:
        return tuple(self.small.vertex_degree(y) for y in self.hosts)


def _closed_neighbourhood(tree: LooseTree, v: int) -> set[int]:
    return set().union(*(set(e) for e in tree.edges_at(v)))


def _host_sets(small: LooseTree, pool: list[int], count: int, limit: int) -> Iterator[tuple[int, ...]]:
    """Hosts whose closed neighbourhoods are pairwise disjoint, so their stars are."""
    pool = sorted(pool, key=lambda y: (small.vertex_degree(y), y))
    closed = {y: _closed_neighbourhood(small, y) for y in pool}
    produced = 0
    for combo in combinations(pool, count):
        if all(not (closed[a] & closed[b]) for a, b in combinations(combo, 2)):
            yield combo
            produced += 1
            if produced >= limit:
                return


def split_plans(tree: LooseTree, eta: Fraction, limit: int = 200, hosts_per_split: int = 3) -> list[SplitPlan]:
    """Candidate splits: |T(x)| in [eta n/Delta, eta n] first, x = root last."""
    k = tree.k
    n = len(tree)
    delta = tree.max_degree()
    low, high = eta * n / delta, eta * n
    ranked = []
    for leaf_edge in tree.top_down_edges():
        if any(tree.child_edges(c) for c in leaf_edge[1:]):
            continue
        remaining = [e for e in tree.top_down_edges() if e != leaf_edge]
        if not remaining:
            continue
        pruned = rooted_tree(k, remaining, tree.root)
        sizes = pruned.subtree_sizes()
        x1 = leaf_edge[0]
        for x in pruned.bfs_order:
            if not pruned.child_edges(x):
                continue
            small = pruned if x == pruned.root else pruned.subtree(x)
            pool = [
                y for y in small.vertices
                if y not in (x, x1) and x1 not in _closed_neighbourhood(small, y)
            ]
            inner = {canon(e) for e in small.edges}
            outer = [e for e in remaining if canon(e) not in inner]
            rest = rooted_tree(k, outer, x) if outer else None
            inside = low <= sizes[x] <= high
            tier = 0 if inside else 1 if x != pruned.root else 2
            for hosts in _host_sets(small, pool, k - 1, hosts_per_split):
                weight = sum(small.vertex_degree(y) for y in hosts)
                touching = sum(x in _closed_neighbourhood(small, y) for y in hosts)
                ranked.append(((tier, touching, abs(sizes[x] - high), weight, len(ranked)),
                               SplitPlan(leaf_edge, x, hosts, small, rest, inside)))
    ranked.sort(key=lambda item: item[0])
    return [plan for _, plan in ranked[:limit]]


def _pipeline_attempt(graph, nbhd: _Neighbourhoods, plan: SplitPlan, v_star: int, target: tuple[int, ...],
                      node_limit: int):
    """One absorb / immerse / almost-spanning attempt; returns (failed stage, None) or (None, result)."""
    x1 = plan.leaf_edge[0]
    w1, us = target[0], target[1:]
    # a host next to x needs v* in one of its leaf sets, so v* is an anchor rather than forbidden
    anchors = [v_star if plan.x in _closed_neighbourhood(plan.small, y) else None for y in plan.hosts]
    tup = _build_tuple(graph, nbhd, target, plan.star_sizes, {v_star} - set(anchors), anchors=anchors)
    if tup is None:
        return "absorb", None
    assert absorbs(graph, tup.stars, target)
    fixed = {plan.x: v_star}
    allowed = {}
    for y, star in zip(plan.hosts, tup.stars):
        fixed[y] = star.centre
        for e in plan.small.edges_at(y):
            allowed[frozenset(e)] = star.edges
    keep_out = set(us)
    if x1 in plan.small.vertices:
        fixed[x1] = w1
    else:
        keep_out.add(w1)
    keep_out.discard(v_star)
    immersed = constrained_embedding(
        graph, plan.small, fixed=fixed, forbidden=keep_out, allowed=allowed,
        reserved=tup.vertices, node_limit=node_limit,
    )
    if immersed.assignment is None:
        return "immerse", None
    psi = dict(immersed.assignment)
    if plan.rest is None:
        return None, (psi, tup)
    taken = (set(psi.values()) - {v_star}) | set(us)
    fixed_rest = {plan.x: v_star}
    if x1 in plan.rest.vertices:
        fixed_rest[x1] = w1
    almost = constrained_embedding(graph, plan.rest, fixed=fixed_rest, forbidden=taken, node_limit=node_limit)
    if almost.assignment is None:
        return "almost", None
    psi.update(almost.assignment)
    return None, (psi, tup)


def _targets_for(graph: Hypergraph, plan: SplitPlan, v_star: int) -> Iterator[tuple[int, ...]]:
    k = graph.k
    firsts = [v_star] if plan.leaf_edge[0] == plan.x else [v for v in graph.vertices if v != v_star]
    for w1 in firsts:
        others = [v for v in graph.vertices if v not in (v_star, w1)]
        for us in permutations(others, k - 1):
            yield (w1,) + us


def pipeline_embedding(graph: Hypergraph, tree: LooseTree, eta: Fraction = Fraction(3, 5),
                       attempt_limit: int = 3000, plan_limit: int = 200, root_limit: int = 40,
                       node_limit: int = 20_000, plan_m: int | None = None,
                       fallback: bool = True) -> SpanningResult:
    """Absorb, immerse, embed the rest, then complete by one centre swap.

    Budgets: ``root_limit`` targets per (plan, root image), ``plan_limit``
    attempts per plan and ``attempt_limit`` overall.  When no configuration
    works and ``fallback`` is set, a direct search is reported with route
    "direct".
    """
    timings: dict[str, float] = {}
    clock = time.perf_counter()
    k, n = graph.k, graph.n
    witness = _size_witness(graph, tree)
    if witness is None and (n - 1) % (k - 1):
        witness = {"reason": "size", "detail": f"n = {n} is not 1 mod {k - 1}"}
    if witness is not None:
        return SpanningResult("pipeline", "failed", None, None, "setup", witness,
                              timings={"setup": time.perf_counter() - clock})
    robust = build_gstar(graph)
    reduced = robust.gstar
    reach = EdgeReach(reduced)
    order = condensation_order(reach)
    order_ok, _ = check_enumeration(order, reach)
    e1 = order[0]
    timings["setup"] = time.perf_counter() - clock
    report: dict = {"gstar_edges": len(reduced.edges), "enumeration_valid": order_ok, "e1": list(e1)}

    clock = time.perf_counter()
    plans = split_plans(tree, Fraction(eta))
    report["split_candidates"] = len(plans)
    roots = list(e1) + [v for v in graph.vertices if v not in e1]
    nbhd = _Neighbourhoods(graph)
    attempts = 0
    failures: dict[str, int] = {}
    found = None
    for plan in plans:
        plan_attempts = 0
        for v_star in roots:
            for count, target in enumerate(_targets_for(graph, plan, v_star)):
                if count >= root_limit or plan_attempts >= plan_limit or attempts >= attempt_limit:
                    break
                attempts += 1
                plan_attempts += 1
                stage, outcome = _pipeline_attempt(graph, nbhd, plan, v_star, target, node_limit)
                if outcome is not None:
                    found = (plan, v_star, target, outcome)
                    break
                failures[stage] = failures.get(stage, 0) + 1
            if found or plan_attempts >= plan_limit or attempts >= attempt_limit:
                break
        if found or attempts >= attempt_limit:
            break
    timings["absorb_immerse_almost"] = time.perf_counter() - clock
    report["attempts"] = attempts
    report["attempt_failures"] = dict(sorted(failures.items()))

    if found is None:
        if not plans:
            stage = "split"
        elif failures:
            stage = max(failures, key=lambda s: (failures[s], s))
        else:
            stage = "absorb"
        witness = {"reason": "no configuration", "attempts": attempts, "failures": report["attempt_failures"]}
        if not fallback:
            return SpanningResult("pipeline", "failed", None, None, stage, witness, report, timings)
        clock = time.perf_counter()
        direct = constrained_embedding(graph, tree, node_limit=node_limit * 50, spanning_prune=True)
        timings["direct"] = time.perf_counter() - clock
        report["absorption_failure"] = {"stage": stage, **witness}
        if direct.assignment is not None:
            vmap = VertexMap(direct.assignment, "embedding")
            assert verify_map(tree, graph, vmap)
            return SpanningResult("pipeline", "embedded", vmap, "direct", None, {}, report, timings)
        status = "failed" if direct.exhausted else "unknown"
        return SpanningResult("pipeline", status, None, None, stage, witness, report, timings)

    plan, v_star, target, (psi, tup) = found
    report.update({
        "x": plan.x, "subtree_size": len(plan.small), "in_window": plan.in_window,
        "leaf_edge": list(plan.leaf_edge), "hosts": list(plan.hosts), "v_star": v_star,
        "target": list(target), "absorber": tup.to_json(),
    })
    inner = list(plan.small.edges) + ([] if plan.rest is None else list(plan.rest.edges))
    state = PipelineState(graph, tree, psi, inner, [tup], {0: plan.hosts}, phase="almost")
    clock = time.perf_counter()
    state.check()
    state = extend_by_absorption(state, plan.leaf_edge, leftover=target[1:], tuple_index=0)
    timings["complete"] = time.perf_counter() - clock

    if plan.rest is not None:
        clock = time.perf_counter()
        report["plan"] = _plan_report(reduced, plan.rest, v_star, plan_m)
        timings["plan"] = time.perf_counter() - clock
    vmap = VertexMap(state.psi, "embedding")
    verdict = verify_map(tree, graph, vmap)
    if not verdict or set(state.psi.values()) != set(graph.vertices):
        raise AssertionError(f"pipeline produced an invalid spanning map: {verdict.reason}")
    report["root_image"] = state.psi[tree.root]
    return SpanningResult("pipeline", "embedded", vmap, "absorption", None, {}, report, timings)


def _plan_report(reduced: Hypergraph, rest: LooseTree, v_star: int, m: int | None) -> dict:
    """Run assign on G* for the almost-spanning part with a virtual cluster size."""
    t = reduced.n
    m = m or max(4, -(-4 * len(rest) // t))
    try:
        result = assign(reduced, None, rest, v1=v_star, m=m)
    except (EmbeddingError, ParameterError) as exc:
        return {"status": "failed", "m": m, "error": str(exc)}
    return {"status": "ok" if result.audit.ok else "audit-violations", "m": m, "audit": result.audit.to_json()}


def embed_spanning(graph: Hypergraph, tree: LooseTree, mode: str = "pipeline", **options) -> SpanningResult:
    if mode == "pipeline":
        return pipeline_embedding(graph, tree, **options)
    if mode == "oracle":
        return oracle_embedding(graph, tree, **options)
    raise ParameterError(f"unknown mode {mode!r}")
