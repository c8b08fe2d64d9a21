"""Tree homomorphisms into hypergraphs, and the reach / rotate certificates.

Both certificates quantify over every rooted loose tree.  Because a
homomorphism may reuse images, all child edges of a vertex can share one
witness edge, which turns the universal statements into fixed points over
(vertex, colour) states:

* ``X[-1] = e`` and ``X[c] = {v : some edge f contains v with f - v inside X[c-1]}``.
  The edge e is c-reachable from v exactly when v lies in ``X[c]``.
* For a pin vector p (class s goes to p[s]), ``OK[0] = {(p[s], s)}`` and
  ``(w, s)`` is in ``OK[h]`` when some edge f through w can be matched
  bijectively onto the other colours with every pair in ``OK[h-1]``.
  A root w in class 1 can be finished with every vertex at depth >= h pinned
  exactly when ``(w, 1)`` is in ``OK[h]``.

``oracle_equivalence`` checks both fixed points against explicit trees.
"""
from __future__ import annotations

import math
import random
from collections import deque
from dataclasses import dataclass, field
from functools import lru_cache
from itertools import permutations
from typing import Callable, Iterable, Sequence

from .hypercore import Hypergraph, ParameterError, canon
from .loosetree import LooseTree
from .perms import (
    Perm,
    all_perms,
    compose,
    cycle_power,
    cycle_string,
    generated_group,
    identity,
    inverse,
    is_perm,
)

INFINITY = math.inf


class ClosureError(ValueError):
    """The supplied permutations do not generate the full symmetric group."""


# -- maps ----------------------------------------------------------------------


@dataclass
class VertexMap:
    assignment: dict[int, int]
    kind: str = "homomorphism"

    def __post_init__(self):
        if self.kind not in ("homomorphism", "embedding"):
            raise ParameterError(f"unknown map kind {self.kind!r}")

    def __getitem__(self, v: int) -> int:
        return self.assignment[v]

    def to_json(self) -> dict:
        return {"kind": self.kind, "assignment": {str(v): w for v, w in sorted(self.assignment.items())}}


@dataclass(frozen=True)
class MapVerdict:
    valid: bool
    reason: str = ""

    def __bool__(self) -> bool:
        return self.valid


def verify_map(tree: LooseTree, graph: Hypergraph, vmap: VertexMap) -> MapVerdict:
    if tree.k != graph.k:
        return MapVerdict(False, f"uniformity mismatch {tree.k} != {graph.k}")
    phi = vmap.assignment
    missing = [v for v in tree.vertices if v not in phi]
    if missing:
        return MapVerdict(False, f"tree vertex {missing[0]} is unmapped")
    for v in tree.vertices:
        if not 0 <= phi[v] < graph.n:
            return MapVerdict(False, f"tree vertex {v} maps outside the graph")
    for edge in tree.edges:
        image = [phi[v] for v in edge]
        if len(set(image)) != len(image):
            return MapVerdict(False, f"tree edge {edge} is not mapped injectively")
        if not graph.has_edge(image):
            return MapVerdict(False, f"tree edge {edge} maps to non-edge {tuple(sorted(image))}")
    if vmap.kind == "embedding":
        images = [phi[v] for v in tree.vertices]
        if len(set(images)) != len(images):
            return MapVerdict(False, "two tree vertices share an image")
    return MapVerdict(True)


# -- reachability ------------------------------------------------------------------


def _forward_step(graph: Hypergraph, inside: frozenset[int]) -> frozenset[int]:
    out = set()
    for v in graph.vertices:
        for f in graph.edges_at(v):
            if all(x == v or x in inside for x in f):
                out.add(v)
                break
    return frozenset(out)


@dataclass(frozen=True)
class ReachabilitySet:
    """Reach levels for a target edge.

    ``levels[i]`` is the set ``X[i - 1]``: vertices from which the target is
    (i-1)-reachable.  ``radii`` follows the coarser convention where the
    target's own vertices get radius 1 and a vertex first appearing in
    ``X[c]`` gets radius c + 2; it is always an upper bound on the exact
    radius.
    """

    target: tuple[int, ...]
    levels: tuple[frozenset[int], ...]
    n: int
    saturated: bool
    cap: int

    @property
    def saturation_radius(self) -> int:
        return len(self.levels) - 2

    def _first_index(self, v: int) -> int | None:
        for i, level in enumerate(self.levels):
            if v in level:
                return i
        return None

    @property
    def radii(self) -> dict[int, float]:
        out: dict[int, float] = {}
        for v in range(self.n):
            i = self._first_index(v)
            out[v] = INFINITY if i is None else i + 1
        return out

    def exact_radius(self, v: int) -> float:
        """Least C >= 0 with the target C-reachable from v (infinity if none)."""
        i = self._first_index(v)
        if i is None:
            return INFINITY
        return max(i - 1, 0)

    def reachable_within(self, v: int, radius: int) -> bool:
        if radius < -1:
            return False
        idx = min(radius + 1, len(self.levels) - 1)
        return v in self.levels[idx]

    def level(self, radius: int) -> frozenset[int]:
        return self.levels[min(max(radius, -1) + 1, len(self.levels) - 1)]

    def edge_radius(self, source_edge: Iterable[int]) -> float:
        """Least C with the target C-reachable from every vertex of ``source_edge``."""
        return max(self.exact_radius(v) for v in source_edge)

    def to_json(self) -> dict:
        radii = self.radii
        return {
            "target": list(self.target),
            "radii": {str(v): (None if r == INFINITY else r) for v, r in radii.items()},
            "exact_radius": {
                str(v): (None if self.exact_radius(v) == INFINITY else self.exact_radius(v))
                for v in range(self.n)
            },
            "saturation_radius": self.saturation_radius,
            "saturated": self.saturated,
            "cap": self.cap,
        }


def reachability(graph: Hypergraph, edge: Iterable[int], cap: int | None = None) -> ReachabilitySet:
    e = canon(edge)
    if e not in graph.edges:
        raise ParameterError(f"{e} is not an edge of the graph")
    cap = graph.n ** graph.k if cap is None else cap
    levels = [frozenset(e)]
    saturated = False
    while len(levels) - 2 < cap:
        nxt = _forward_step(graph, levels[-1])
        if nxt == levels[-1]:
            saturated = True
            break
        levels.append(nxt)
    return ReachabilitySet(e, tuple(levels), graph.n, saturated, cap)


class ReachabilityIndex:
    """Lazily computed reach levels for every edge of a graph."""

    def __init__(self, graph: Hypergraph, cap: int | None = None):
        self.graph = graph
        self.cap = cap
        self._sets: dict[tuple[int, ...], ReachabilitySet] = {}

    def of(self, edge: Iterable[int]) -> ReachabilitySet:
        e = canon(edge)
        if e not in self._sets:
            self._sets[e] = reachability(self.graph, e, self.cap)
        return self._sets[e]

    def edge_radius(self, source: Iterable[int], target: Iterable[int]) -> float:
        """Least C with ``target`` C-reachable from the edge ``source``."""
        return self.of(target).edge_radius(source)


# -- rotatability ---------------------------------------------------------------------


def _child_colours(k: int, colour: int) -> list[int]:
    return [(colour - 1 + offset) % k + 1 for offset in range(1, k)]


def _match_children(
    graph: Hypergraph, w: int, colours: Sequence[int], accept: Callable[[int, int], bool]
) -> tuple[tuple[int, ...], tuple[int, ...]] | None:
    """Find an edge f through w and an ordering of f - w so that the vertex at
    position j is accepted for ``colours[j]``."""
    for f in graph.edges_at(w):
        rest = [x for x in f if x != w]
        for order in permutations(rest):
            if all(accept(x, t) for x, t in zip(order, colours)):
                return f, order
    return None


class RotationTable:
    """The OK-levels for one ordered edge and one pin vector."""

    def __init__(self, graph: Hypergraph, pins: Sequence[int], cap: int):
        self.graph = graph
        self.k = graph.k
        self.pins = tuple(pins)
        self.cap = cap
        self.levels: list[frozenset[tuple[int, int]]] = [
            frozenset((self.pins[s - 1], s) for s in range(1, self.k + 1))
        ]
        self.saturated = False

    def _step(self) -> None:
        prev = self.levels[-1]
        out = set(prev)
        accept = lambda x, t: (x, t) in prev  # noqa: E731
        for w in self.graph.vertices:
            for s in range(1, self.k + 1):
                if (w, s) in out:
                    continue
                if _match_children(self.graph, w, _child_colours(self.k, s), accept):
                    out.add((w, s))
        nxt = frozenset(out)
        if nxt == prev:
            self.saturated = True
        else:
            self.levels.append(nxt)

    def extend_to(self, h: int) -> None:
        while not self.saturated and len(self.levels) <= min(h, self.cap):
            self._step()

    def ok(self, w: int, s: int, h: int) -> bool:
        self.extend_to(h)
        return (w, s) in self.levels[min(h, len(self.levels) - 1)]

    def least_radius(self, root: int) -> float | None:
        """Least h with (root, 1) in OK[h]; infinity if saturation excludes it,
        None if the cap was hit first."""
        h = 0
        while True:
            if (root, 1) in self.levels[min(h, len(self.levels) - 1)]:
                return h
            if self.saturated and h >= len(self.levels) - 1:
                return INFINITY
            if h >= self.cap:
                return None
            h += 1
            self.extend_to(h)


MODES = ("round", "bracket", "index", "star", "full")


@dataclass(frozen=True)
class RotationWitness:
    """A rotation certificate for an ordered edge.

    ``mode`` round is (C, pi, sigma): root at u_pi(1), class s pinned to
    u_sigma(s).  bracket is [C, pi, sigma] = (C, pi, sigma pi).  index is
    [C, i, sigma] over all pi with pi(1) = i.  star is [C, *, sigma] over all pi.
    full means every root in the edge and every pin permutation.
    """

    edge: tuple[int, ...]
    sigma: Perm
    radius: int
    mode: str
    pi: Perm | None = None
    index: int | None = None
    method: str = "dp"

    def to_json(self) -> dict:
        out = {
            "edge": sorted(self.edge),
            "ordering": list(self.edge),
            "mode": self.mode,
            "sigma": cycle_string(self.sigma),
            "radius": self.radius,
            "method": self.method,
        }
        if self.pi is not None:
            out["pi"] = cycle_string(self.pi)
        if self.index is not None:
            out["index"] = self.index
        return out


@dataclass(frozen=True)
class RotationRefutation:
    edge: tuple[int, ...]
    sigma: Perm
    mode: str
    definitive: bool
    reason: str
    cap: int

    def __bool__(self) -> bool:
        return False

    def to_json(self) -> dict:
        return {
            "edge": list(self.edge),
            "sigma": cycle_string(self.sigma),
            "mode": self.mode,
            "definitive": self.definitive,
            "reason": self.reason,
            "cap": self.cap,
        }


def default_rotation_cap(n: int, k: int) -> int:
    return 10**7 * math.factorial(k) * n**4


class RotationSolver:
    """Caches one RotationTable per pin vector for an ordered edge."""

    def __init__(self, graph: Hypergraph, edge: Sequence[int], cap: int | None = None):
        ordered = tuple(edge)
        if canon(ordered) not in graph.edges:
            raise ParameterError(f"{ordered} is not an edge of the graph")
        self.graph = graph
        self.edge = ordered
        self.k = graph.k
        self.cap = default_rotation_cap(graph.n, graph.k) if cap is None else cap
        self._tables: dict[Perm, RotationTable] = {}

    def table(self, pin_perm: Perm) -> RotationTable:
        if pin_perm not in self._tables:
            pins = [self.edge[pin_perm[s] - 1] for s in range(self.k)]
            self._tables[pin_perm] = RotationTable(self.graph, pins, self.cap)
        return self._tables[pin_perm]

    def vertex(self, i: int) -> int:
        return self.edge[i - 1]

    def members(self, mode: str, sigma: Perm, pi: Perm | None = None, index: int | None = None):
        """(root position, pin permutation) pairs quantified by a mode."""
        k = self.k
        if mode == "round":
            return [(pi[0], sigma)]
        if mode == "bracket":
            return [(pi[0], compose(sigma, pi))]
        if mode == "index":
            return [(index, compose(sigma, p)) for p in all_perms(k) if p[0] == index]
        if mode == "star":
            return [(p[0], compose(sigma, p)) for p in all_perms(k)]
        if mode == "full":
            return [(i, rho) for rho in all_perms(k) for i in range(1, k + 1)]
        raise ParameterError(f"unknown mode {mode!r}")

    def radius(self, mode: str, sigma: Perm, pi: Perm | None = None, index: int | None = None) -> float | None:
        worst: float = 0
        for position, pin_perm in self.members(mode, sigma, pi, index):
            r = self.table(pin_perm).least_radius(self.vertex(position))
            if r is None:
                return None
            worst = max(worst, r)
        return worst

    def holds(self, radius: int, mode: str, sigma: Perm, pi: Perm | None = None, index: int | None = None) -> bool:
        return all(
            self.table(pin).ok(self.vertex(pos), 1, radius)
            for pos, pin in self.members(mode, sigma, pi, index)
        )


def rotatability(
    graph: Hypergraph,
    edge: Sequence[int],
    sigma: Perm | None = None,
    c_max: int | None = None,
    mode: str = "star",
    pi: Perm | None = None,
    index: int | None = None,
    solver: RotationSolver | None = None,
) -> RotationWitness | RotationRefutation:
    """Least radius for the requested rotation mode, or a refutation."""
    k = graph.k
    sigma = identity(k) if sigma is None else tuple(sigma)
    if not is_perm(sigma, k):
        raise ParameterError(f"{sigma} is not a permutation of 1..{k}")
    if mode in ("round", "bracket") and (pi is None or not is_perm(pi, k)):
        raise ParameterError(f"mode {mode} needs a permutation pi")
    if mode == "index" and not (index and 1 <= index <= k):
        raise ParameterError("mode index needs 1 <= index <= k")
    solver = solver or RotationSolver(graph, edge, c_max)
    r = solver.radius(mode, sigma, pi, index)
    if r is None:
        return RotationRefutation(solver.edge, sigma, mode, False, "radius cap reached", solver.cap)
    if r == INFINITY:
        return RotationRefutation(solver.edge, sigma, mode, True, "fixed point saturated without the root", solver.cap)
    return RotationWitness(solver.edge, sigma, int(r), mode, pi, index, "dp")


def full_rotation_radius(graph: Hypergraph, edge: Sequence[int], cap: int | None = None,
                         solver: RotationSolver | None = None) -> float | None:
    solver = solver or RotationSolver(graph, edge, cap)
    return solver.radius("full", identity(graph.k))


# -- rotation algebra ------------------------------------------------------------------


def compose_rotations(first: RotationWitness, second: RotationWitness) -> RotationWitness:
    """[C1,*,s1] and [C2,*,s2] give [C1+C2,*,s1 s2] (second is applied near the root)."""
    if first.edge != second.edge:
        raise ParameterError("witnesses certify different ordered edges")
    if first.mode != "star" or second.mode != "star":
        raise ParameterError("composition needs two star-mode witnesses")
    return RotationWitness(
        first.edge,
        compose(first.sigma, second.sigma),
        first.radius + second.radius,
        "star",
        method="composed",
    )


def identity_witness(edge: Sequence[int], k: int) -> RotationWitness:
    # mapping each class onto its own vertex of the edge needs no slack
    return RotationWitness(tuple(edge), identity(k), 1, "star", method="identity")


@dataclass(frozen=True)
class ClosureResult:
    edge: tuple[int, ...]
    radius: int
    per_sigma: dict
    bound: int

    def witness(self) -> RotationWitness:
        k = len(self.edge)
        return RotationWitness(self.edge, identity(k), self.radius, "full", method="closure")


def generator_closure(edge: Sequence[int], witnesses: Iterable[RotationWitness]) -> ClosureResult:
    """Full rotatability from star witnesses whose permutations generate S_k.

    Every permutation is written as a shortest word in the generators; its
    radius is the sum of the generator radii along the word.
    """
    ordered = tuple(edge)
    k = len(ordered)
    by_sigma: dict[Perm, RotationWitness] = {}
    for w in witnesses:
        if w.edge != ordered or w.mode != "star":
            raise ParameterError("closure needs star witnesses for the same ordered edge")
        if w.sigma not in by_sigma or w.radius < by_sigma[w.sigma].radius:
            by_sigma[w.sigma] = w
    words = generated_group(by_sigma, k)
    if len(words) != math.factorial(k):
        raise ClosureError(f"generators span a subgroup of order {len(words)}, not {math.factorial(k)}")
    per_sigma = {}
    for perm, word in words.items():
        per_sigma[perm] = 1 if not word else sum(by_sigma[g].radius for g in word)
    top = max(by_sigma[g].radius for g in by_sigma) if by_sigma else 1
    return ClosureResult(ordered, max(per_sigma.values()), per_sigma, math.factorial(k) * max(top, 1))


def transfer_radius(k: int, radius: int, walk_edges: int) -> int:
    return k * radius + 2 * k * walk_edges


def tight_walk_transfer(
    graph: Hypergraph,
    edge_e: Sequence[int],
    edge_f: Sequence[int],
    walk: Sequence[int],
    rho_e: Perm,
    rho_f: Perm,
    witness: RotationWitness,
) -> RotationWitness:
    """Carry a star witness along a tight walk.

    ``walk`` lists k*l vertices; every k consecutive ones form an edge, the
    first k are e reordered by rho_e and the last k are f reordered by rho_f.
    The result certifies f for rho^-1 sigma with rho = rho_e rho_f^-1.  For
    k = 4 the radius is 4C + 8l.
    """
    k = graph.k
    e, f = tuple(edge_e), tuple(edge_f)
    if witness.edge != e or witness.mode != "star":
        raise ParameterError("the witness must be a star witness for edge e")
    if len(walk) % k or len(walk) < k:
        raise ParameterError("walk length must be a positive multiple of k")
    ell = len(walk) // k
    head = tuple(e[rho_e[i] - 1] for i in range(k))
    tail = tuple(f[rho_f[i] - 1] for i in range(k))
    if tuple(walk[:k]) != head or tuple(walk[-k:]) != tail:
        raise ParameterError("walk boundary does not match the labelled edges")
    for start in range(len(walk) - k + 1):
        window = walk[start : start + k]
        if len(set(window)) != k or not graph.has_edge(window):
            raise ParameterError(f"walk window at {start} is not an edge")
    rho = compose(rho_e, inverse(rho_f))
    return RotationWitness(
        f,
        compose(inverse(rho), witness.sigma),
        transfer_radius(k, witness.radius, ell),
        "star",
        method="transfer",
    )


def even_link_walk(graph: Hypergraph, first: Sequence[int], last: Sequence[int],
                   allowed_pairs: set[tuple[int, int]] | None = None) -> list[int] | None:
    """Tight walk from u1 u2 y3 y4 to u1 u2 u3 u4 in a 4-graph.

    ``first`` = (u1, u2, y3, y4) and ``last`` = (u1, u2, u3, u4).  The walk is
    u1 u2 a1 a2 u1 u2 a3 a4 ... where a1 a2 a3 ... is a walk in the link of
    u1 u2 (optionally restricted to ``allowed_pairs``) with an even number of
    vertices.  Returns None when no such walk exists.
    """
    if graph.k != 4 or tuple(first[:2]) != tuple(last[:2]):
        raise ParameterError("even_link_walk needs a 4-graph and a shared leading pair")
    u1, u2 = first[0], first[1]
    adjacency: dict[int, set[int]] = {}
    for e in graph.edges_at(u1):
        if u2 not in e:
            continue
        a, b = (x for x in e if x not in (u1, u2))
        pair = (min(a, b), max(a, b))
        if allowed_pairs is not None and pair not in allowed_pairs:
            continue
        adjacency.setdefault(a, set()).add(b)
        adjacency.setdefault(b, set()).add(a)
    start = (first[2], first[3])
    goal = (last[2], last[3])
    if start[1] not in adjacency.get(start[0], ()) or goal[1] not in adjacency.get(goal[0], ()):
        return None
    # states: (directed pair, parity of vertex count); two vertices so far -> parity 0
    origin = (start, 0)
    parent: dict = {origin: None}
    queue = deque([origin])
    found = None
    while queue:
        state = queue.popleft()
        (a, b), parity = state
        if (a, b) == goal and parity == 0:
            found = state
            break
        for c in sorted(adjacency[b]):
            nxt = ((b, c), parity ^ 1)
            if nxt not in parent:
                parent[nxt] = state
                queue.append(nxt)
    if found is None:
        return None
    chain = []
    cur = found
    while cur is not None:
        chain.append(cur[0])
        cur = parent[cur]
    chain.reverse()
    inner = [chain[0][0]] + [pair[1] for pair in chain]
    walk = []
    for i in range(0, len(inner), 2):
        walk.extend([u1, u2, inner[i], inner[i + 1]])
    return walk


# -- materializers ------------------------------------------------------------------------


def materialize_reach(tree: LooseTree, graph: Hypergraph, reach: ReachabilitySet, source: int, radius: int) -> VertexMap:
    """Homomorphism with root -> source and every vertex deeper than ``radius`` in the target."""
    if not reach.reachable_within(source, radius):
        raise ParameterError(f"target is not {radius}-reachable from {source}")
    target = reach.target
    phi = {tree.root: source}
    budget = {tree.root: radius}
    for v in tree.bfs_order:
        w = phi[v]
        b = max(budget[v] - 1, -1)
        allowed = reach.level(b)
        for child_edge in tree.child_edges(v):
            kids = child_edge[1:]
            if budget[v] <= -1:
                rest = [x for x in target if x != w]
                choice = (target, tuple(rest))
            else:
                choice = _match_children(graph, w, [0] * len(kids), lambda x, _t: x in allowed)
            assert choice is not None, "reach levels promised an extension"
            for kid, image in zip(kids, choice[1]):
                phi[kid] = image
                budget[kid] = b
    return VertexMap(phi)


def materialize_rotation(tree: LooseTree, graph: Hypergraph, table: RotationTable, root_image: int, radius: int) -> VertexMap:
    """Homomorphism with root -> root_image and class s at depth >= radius pinned."""
    if not table.ok(root_image, 1, radius):
        raise ParameterError("the table does not certify this root at this radius")
    colour = tree.colour
    phi = {tree.root: root_image}
    budget = {tree.root: radius}
    for v in tree.bfs_order:
        w = phi[v]
        h = max(budget[v] - 1, 0)
        level = table.levels[min(h, len(table.levels) - 1)]
        for child_edge in tree.child_edges(v):
            kids = child_edge[1:]
            wanted = [colour[x] for x in kids]
            choice = _match_children(graph, w, wanted, lambda x, t: (x, t) in level)
            assert choice is not None, "rotation levels promised an extension"
            for kid, image in zip(kids, choice[1]):
                phi[kid] = image
                budget[kid] = h
    return VertexMap(phi)


@dataclass
class Prop44Report:
    reach_radius: int
    rotate_radius: int
    unpinned_per_class: list[int]
    bound: int
    max_degree: int

    @property
    def within_bound(self) -> bool:
        return all(c <= self.bound for c in self.unpinned_per_class)


def balanced_homomorphism(
    tree: LooseTree,
    graph: Hypergraph,
    source: int,
    edge: Sequence[int],
    reach: ReachabilitySet | None = None,
    solver: RotationSolver | None = None,
    class_targets: Perm | None = None,
) -> tuple[VertexMap, Prop44Report]:
    """Root to ``source`` and most of class j onto ``edge[target(j)]``.

    First route the tree into the edge with the reach levels, then re-root
    at every vertex on the first forced depth and rotate its subtree so each
    class lands on its assigned vertex.  ``class_targets`` defaults to the
    identity (class j onto the j-th vertex of ``edge``).
    """
    k = graph.k
    ordered = tuple(edge)
    targets = identity(k) if class_targets is None else tuple(class_targets)
    reach = reach or reachability(graph, ordered)
    solver = solver or RotationSolver(graph, ordered)
    c_reach = reach.exact_radius(source)
    if c_reach == INFINITY:
        raise ParameterError(f"edge {ordered} is unreachable from {source}")
    c_reach = int(c_reach)
    if source in ordered:
        c_reach = -1
    colour = tree.colour
    depth = tree.depth
    routing = materialize_reach(tree, graph, reach, source, c_reach)
    cut = c_reach + 1
    phi: dict[int, int] = {}
    rotate_used = 0
    for v in tree.bfs_order:
        if depth[v] < cut:
            phi[v] = routing[v]
        elif depth[v] == cut:
            sub = tree.subtree(v)
            i = colour[v]
            # subtree class j is tree class tau^(i-1)(j), which must land on targets of that class
            shift = cycle_power(k, i - 1)
            pin_perm = tuple(targets[shift[j] - 1] for j in range(k))
            table = solver.table(pin_perm)
            root_image = routing[v]
            r = table.least_radius(root_image)
            if r is None or r == INFINITY:
                raise ParameterError(f"edge {ordered} is not rotatable for pins {pin_perm}")
            rotate_used = max(rotate_used, int(r))
            if sub is None:
                phi[v] = root_image
                continue
            part = materialize_rotation(sub, graph, table, root_image, int(r))
            for x, image in part.assignment.items():
                phi[x] = image
    for v in tree.vertices:
        phi.setdefault(v, routing[v])
    rotate_full = solver.radius("full", identity(k))
    c_prime = int(rotate_full) if rotate_full not in (None, INFINITY) else rotate_used
    unpinned = [0] * k
    for v in tree.vertices:
        j = colour[v]
        if phi[v] != ordered[targets[j - 1] - 1]:
            unpinned[j - 1] += 1
    delta = tree.max_degree()
    bound = (k * delta) ** (max(c_reach, 0) + c_prime)
    return VertexMap(phi), Prop44Report(max(c_reach, 0), c_prime, unpinned, bound, delta)


# -- explicit tree oracle -------------------------------------------------------------------

# A shape is a tuple of child edges; a child edge is a tuple of k-1 child shapes
# ordered by layer offset.  The empty tuple is a leaf.
Shape = tuple


def shape_depth(shape: Shape) -> int:
    return 0 if not shape else 1 + max(shape_depth(c) for edge in shape for c in edge)


def shape_size(shape: Shape) -> int:
    return 1 + sum(shape_size(c) for edge in shape for c in edge)


def full_shape(k: int, depth: int, branching: int) -> Shape:
    if depth == 0:
        return ()
    child = full_shape(k, depth - 1, branching)
    return tuple(tuple([child] * (k - 1)) for _ in range(branching))


def chain_shape(k: int, depth: int) -> Shape:
    return full_shape(k, depth, 1)


def enumerate_shapes(k: int, depth: int, branching: int, limit: int) -> list[Shape] | None:
    """All shapes of depth <= ``depth`` with <= ``branching`` child edges per
    vertex, or None if there are more than ``limit``."""
    level: list[Shape] = [()]
    for _ in range(depth):
        combos = _product(level, k - 1, limit)
        if combos is None:
            return None
        edges = [tuple(combo) for combo in combos]
        shapes: list[Shape] = []
        for count in range(branching + 1):
            for multiset in _multisets(len(edges), count):
                shapes.append(tuple(edges[i] for i in multiset))
                if len(shapes) > limit:
                    return None
        level = shapes
    return level


def _product(items, repeat, limit):
    out = [()]
    for _ in range(repeat):
        out = [prefix + (x,) for prefix in out for x in items]
        if len(out) > limit:
            return None
    return out


def _multisets(size: int, count: int):
    def rec(start, left):
        if left == 0:
            yield ()
            return
        for i in range(start, size):
            for rest in rec(i, left - 1):
                yield (i,) + rest
    return rec(0, count)


def random_shape(k: int, depth: int, branching: int, rng: random.Random) -> Shape:
    if depth == 0:
        return ()
    count = rng.randint(0, branching)
    return tuple(
        tuple(random_shape(k, depth - 1, branching, rng) for _ in range(k - 1)) for _ in range(count)
    )


def shape_to_tree(k: int, shape: Shape) -> LooseTree | None:
    if not shape:
        return None
    edges = []
    counter = [1]

    def build(v, sub):
        for child_edge in sub:
            ids = []
            for _ in child_edge:
                ids.append(counter[0])
                counter[0] += 1
            edges.append((v,) + tuple(ids))
            for cid, child in zip(ids, child_edge):
                build(cid, child)

    build(0, shape)
    return LooseTree(k, edges, root=0)


Allowed = Callable[[int, int], "frozenset[int] | None"]


def shape_root_images(graph: Hypergraph, shape: Shape, allowed: Allowed) -> frozenset[int]:
    """Root images admitting a homomorphism of the shape under per-vertex
    restrictions ``allowed(depth, colour)`` (None means unrestricted).

    Candidates are eliminated bottom-up on the explicit tree; identical
    subtrees at the same depth and colour are evaluated once.
    """
    k = graph.k
    everything = frozenset(graph.vertices)

    @lru_cache(maxsize=None)
    def good(sub: Shape, depth: int, col: int) -> frozenset[int]:
        cands = allowed(depth, col)
        cands = everything if cands is None else cands
        if not sub:
            return frozenset(cands)
        out = set()
        kid_colours = _child_colours(k, col)
        kid_sets = [
            [good(c, depth + 1, t) for c, t in zip(edge, kid_colours)] for edge in sub
        ]
        for w in cands:
            fine = True
            for sets in kid_sets:
                hit = False
                for f in graph.edges_at(w):
                    rest = [x for x in f if x != w]
                    if any(all(x in s for x, s in zip(order, sets)) for order in permutations(rest)):
                        hit = True
                        break
                if not hit:
                    fine = False
                    break
            if fine:
                out.add(w)
        return frozenset(out)

    return good(shape, 0, 1)


def backtrack_root_images(graph: Hypergraph, tree: LooseTree, allowed: Allowed) -> frozenset[int]:
    """Plain backtracking over vertex images, one root candidate at a time."""
    order = tree.bfs_order
    colour, depth = tree.colour, tree.depth
    parent_edge = {v: tree.parent_edge(v) for v in order}
    domains = {}
    for v in order:
        a = allowed(depth[v], colour[v])
        domains[v] = sorted(graph.vertices if a is None else a)
    last_vertex_of_edge = {}
    for e in tree.edges:
        last_vertex_of_edge[e] = max(e, key=order.index)

    def search(idx: int, phi: dict[int, int]) -> bool:
        if idx == len(order):
            return True
        v = order[idx]
        for w in domains[v]:
            phi[v] = w
            pe = parent_edge[v]
            if pe is not None and last_vertex_of_edge[pe] == v:
                image = [phi[x] for x in pe]
                if len(set(image)) != len(image) or not graph.has_edge(image):
                    continue
            elif pe is not None:
                if w in [phi[x] for x in pe if x in phi and x != v]:
                    continue
            if search(idx + 1, phi):
                return True
        phi.pop(v, None)
        return False

    out = set()
    for w in domains[order[0]]:
        if search(1, {order[0]: w}):
            out.add(w)
    return frozenset(out)


def reach_allowed(target: Sequence[int], radius: int) -> Allowed:
    inside = frozenset(target)
    return lambda depth, _col: inside if depth > radius else None


def pin_allowed(pins: Sequence[int], radius: int) -> Allowed:
    singles = [frozenset([p]) for p in pins]
    return lambda depth, col: singles[col - 1] if depth >= radius else None


@dataclass
class OracleVerdict:
    instances: int = 0
    trees_checked: int = 0
    disagreements: list = field(default_factory=list)
    partial: bool = False
    notes: list = field(default_factory=list)

    @property
    def agree(self) -> bool:
        return not self.disagreements

    def to_json(self) -> dict:
        return {
            "instances": self.instances,
            "trees_checked": self.trees_checked,
            "disagreements": [str(d) for d in self.disagreements],
            "partial": self.partial,
            "notes": self.notes,
        }


def oracle_equivalence(
    graph: Hypergraph,
    edge: Sequence[int],
    depth_cap: int = 3,
    branch_cap: int = 2,
    pin_perms: Iterable[Perm] | None = None,
    shape_limit: int = 600,
    samples: int = 40,
    seed: int = 0,
    backtrack_size: int = 13,
) -> OracleVerdict:
    """Compare the reach and rotate fixed points with explicit trees.

    The full tree of the given depth and branching contains every smaller
    shape as a rooted subtree, so its root-image set decides the universal
    statement over all shapes within the caps.  On top of that every shape is
    enumerated when there are at most ``shape_limit`` of them (otherwise
    ``samples`` random ones are drawn and the verdict is flagged partial),
    and small trees are re-solved by plain backtracking.
    """
    if graph.n > 10 or depth_cap > 4:
        raise ParameterError("oracle_equivalence is meant for n <= 10 and depth <= 4")
    k = graph.k
    ordered = tuple(edge)
    verdict = OracleVerdict()
    reach = reachability(graph, ordered)
    solver = RotationSolver(graph, ordered)
    shapes = enumerate_shapes(k, depth_cap, branch_cap, shape_limit)
    if shapes is None:
        verdict.partial = True
        rng = random.Random(seed)
        shapes = [random_shape(k, depth_cap, branch_cap, rng) for _ in range(samples)]
        shapes += [chain_shape(k, d) for d in range(1, depth_cap + 1)]
        verdict.notes.append(f"sampled {len(shapes)} shapes; the full tree covers the rest")
    shapes = [s for s in shapes if s]
    biggest = full_shape(k, depth_cap, branch_cap)
    everyone = frozenset(graph.vertices)

    def check(label, allowed, predicted, decisive):
        verdict.instances += 1
        got = shape_root_images(graph, biggest, allowed)
        verdict.trees_checked += 1
        if decisive and got != predicted:
            verdict.disagreements.append((label, "full tree", sorted(predicted), sorted(got)))
        if not predicted <= got:
            verdict.disagreements.append((label, "soundness on full tree", sorted(predicted), sorted(got)))
        for shape in shapes:
            images = shape_root_images(graph, shape, allowed)
            verdict.trees_checked += 1
            if not (predicted <= images and got <= images):
                verdict.disagreements.append((label, shape, sorted(predicted), sorted(images)))
            if shape_size(shape) <= backtrack_size:
                plain = backtrack_root_images(graph, shape_to_tree(k, shape), allowed)
                if plain != images:
                    verdict.disagreements.append((label, "backtracking", shape, sorted(plain), sorted(images)))

    for radius in range(-1, depth_cap):
        predicted = reach.level(radius)
        check(("reach", radius), reach_allowed(ordered, radius), predicted, True)
    if pin_perms is None:
        pin_perms = all_perms(k) if k <= 3 else [identity(k), (2, 1) + tuple(range(3, k + 1)), cycle_power(k, 1)]
    for pin in pin_perms:
        table = solver.table(tuple(pin))
        for radius in range(0, depth_cap + 1):
            predicted = frozenset(w for w in everyone if table.ok(w, 1, radius))
            check(("rotate", cycle_string(tuple(pin)), radius), pin_allowed(table.pins, radius), predicted, True)
    return verdict
