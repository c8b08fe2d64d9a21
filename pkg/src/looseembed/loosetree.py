"""Rooted loose trees: validation, colouring, layering, distances, generators,
and the small-subtree decomposition used when distributing a tree over edges.
"""
from __future__ import annotations

import json
import random
from collections import deque
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Sequence

from .hypercore import FormatError, ParameterError

TreeEdge = tuple[int, ...]


class TreeGenerationError(ValueError):
    pass


@dataclass(frozen=True)
class TreeVerdict:
    valid: bool
    reason: str = ""

    def __bool__(self) -> bool:
        return self.valid


def check_edges(k: int, edges: Sequence[Sequence[int]], root: int | None = None) -> TreeVerdict:
    """Check the loose-tree growth rule on an edge list in construction order."""
    if k < 2:
        return TreeVerdict(False, "uniformity must be at least 2")
    if not edges:
        return TreeVerdict(False, "a loose tree needs at least one edge")
    seen: set[int] = set()
    for idx, edge in enumerate(edges):
        if len(edge) != k or len(set(edge)) != k:
            return TreeVerdict(False, f"edge {idx} is not a set of {k} distinct vertices")
        if idx == 0:
            seen.update(edge)
            continue
        shared = seen.intersection(edge)
        if len(shared) != 1:
            return TreeVerdict(False, f"edge {idx} meets earlier edges in {len(shared)} vertices, expected 1")
        seen.update(edge)
    if root is not None and root not in seen:
        return TreeVerdict(False, f"root {root} is not a tree vertex")
    return TreeVerdict(True)


class LooseTree:
    """A rooted k-uniform loose tree.

    Vertices are arbitrary integers.  ``edges`` keeps the construction order
    (each edge after the first meets the earlier ones in one vertex).
    """

    def __init__(self, k: int, edges: Iterable[Sequence[int]], root: int | None = None):
        edge_list = [tuple(e) for e in edges]
        verdict = check_edges(k, edge_list, root)
        if not verdict:
            raise ParameterError(f"not a loose tree: {verdict.reason}")
        self.k = k
        self.edges: tuple[TreeEdge, ...] = tuple(edge_list)
        self.root = edge_list[0][0] if root is None else root
        incident: dict[int, list[int]] = {}
        for idx, edge in enumerate(self.edges):
            for v in edge:
                incident.setdefault(v, []).append(idx)
        self._incident = incident

    # -- basic structure ----------------------------------------------------

    @property
    def vertices(self) -> list[int]:
        return sorted(self._incident)

    def __len__(self) -> int:
        return len(self._incident)

    def edges_at(self, v: int) -> list[TreeEdge]:
        return [self.edges[i] for i in self._incident[v]]

    def vertex_degree(self, v: int) -> int:
        return len(self._incident[v])

    def max_degree(self) -> int:
        return max(len(ids) for ids in self._incident.values())

    def leaves(self) -> list[int]:
        return [v for v in self.vertices if len(self._incident[v]) == 1 and v != self.root]

    # -- rooted structure -----------------------------------------------------

    @cached_property
    def _rooted(self):
        """BFS from the root: parent edge, child edges, layer, depth, order."""
        k = self.k
        layer = {self.root: 1}
        depth = {self.root: 0}
        parent_edge: dict[int, int | None] = {self.root: None}
        children: dict[int, list[int]] = {v: [] for v in self._incident}
        order = [self.root]
        edge_top: dict[int, int] = {}
        queue = deque([self.root])
        done_edges: set[int] = set()
        while queue:
            v = queue.popleft()
            for idx in self._incident[v]:
                if idx in done_edges:
                    continue
                done_edges.add(idx)
                edge_top[idx] = v
                children[v].append(idx)
                fresh = [u for u in self.edges[idx] if u != v]
                for offset, u in enumerate(fresh, start=1):
                    layer[u] = layer[v] + offset
                    depth[u] = depth[v] + 1
                    parent_edge[u] = idx
                    order.append(u)
                    queue.append(u)
        assert len(order) == len(self._incident) and len(order) == len(set(order))
        assert k >= 2
        return layer, depth, parent_edge, children, order, edge_top

    @property
    def layer(self) -> dict[int, int]:
        return self._rooted[0]

    @property
    def depth(self) -> dict[int, int]:
        """Number of edges on the path from the root."""
        return self._rooted[1]

    @property
    def bfs_order(self) -> list[int]:
        return self._rooted[4]

    def parent_edge(self, v: int) -> TreeEdge | None:
        idx = self._rooted[2][v]
        return None if idx is None else self.edges[idx]

    def parent(self, v: int) -> int | None:
        idx = self._rooted[2][v]
        return None if idx is None else self._rooted[5][idx]

    def child_edges(self, v: int) -> list[TreeEdge]:
        """Edges below ``v`` with ``v`` first, then the new vertices in layer order."""
        out = []
        for idx in self._rooted[3][v]:
            out.append((v,) + tuple(u for u in self.edges[idx] if u != v))
        return out

    def top_down_edges(self) -> list[TreeEdge]:
        """Every edge, top vertex first, in BFS order."""
        out = []
        for v in self.bfs_order:
            out.extend(self.child_edges(v))
        return out

    @property
    def colour(self) -> dict[int, int]:
        """Colour class in 1..k; the root has colour 1 and layers repeat mod k."""
        return {v: (lay - 1) % self.k + 1 for v, lay in self.layer.items()}

    def colour_classes(self) -> list[list[int]]:
        classes: list[list[int]] = [[] for _ in range(self.k)]
        for v, c in sorted(self.colour.items()):
            classes[c - 1].append(v)
        return classes

    def shift_classes(self, power: int) -> list[list[int]]:
        """Classes relabelled by the cycle (1 2 ... k) applied ``power`` times.

        Entry i of the result is the class that receives label i + 1.
        """
        classes = self.colour_classes()
        k = self.k
        return [classes[(i - power) % k] for i in range(k)]

    # -- distances ---------------------------------------------------------------

    def vertex_distances(self, source: int) -> dict[int, int]:
        dist = {source: 0}
        queue = deque([source])
        while queue:
            v = queue.popleft()
            for idx in self._incident[v]:
                for u in self.edges[idx]:
                    if u not in dist:
                        dist[u] = dist[v] + 1
                        queue.append(u)
        return dist

    def dist_vertex_edge(self, v: int, edge: Sequence[int]) -> int:
        dist = self.vertex_distances(v)
        return min(dist[u] for u in edge)

    def dist_edges(self, first: Sequence[int], second: Sequence[int]) -> int:
        """Distance in the line graph (edges adjacent when they share a vertex)."""
        index = {tuple(sorted(e)): i for i, e in enumerate(self.edges)}
        start, goal = index[tuple(sorted(first))], index[tuple(sorted(second))]
        dist = {start: 0}
        queue = deque([start])
        while queue:
            i = queue.popleft()
            if i == goal:
                return dist[i]
            for v in self.edges[i]:
                for j in self._incident[v]:
                    if j not in dist:
                        dist[j] = dist[i] + 1
                        queue.append(j)
        raise AssertionError("tree is connected")

    # -- subtrees ------------------------------------------------------------------

    def descendants(self, v: int) -> list[int]:
        """Vertices of the subtree below ``v`` (including ``v``) in BFS order."""
        children = self._rooted[3]
        out = [v]
        queue = deque([v])
        while queue:
            u = queue.popleft()
            for idx in children[u]:
                for w in self.edges[idx]:
                    if w != u:
                        out.append(w)
                        queue.append(w)
        return out

    def subtree_edges(self, v: int) -> list[TreeEdge]:
        out = []
        for u in self.descendants(v):
            out.extend(self.child_edges(u))
        return out

    def subtree(self, v: int) -> "LooseTree | None":
        """The subtree rooted at ``v``; None when ``v`` has no children."""
        edges = self.subtree_edges(v)
        if not edges:
            return None
        return LooseTree(self.k, edges, root=v)

    def subtree_sizes(self) -> dict[int, int]:
        sizes = {}
        for v in reversed(self.bfs_order):
            sizes[v] = 1 + sum(
                sizes[u] for e in self.child_edges(v) for u in e[1:]
            )
        return sizes

    def relabel(self, mapping: dict[int, int]) -> "LooseTree":
        return LooseTree(self.k, [tuple(mapping[v] for v in e) for e in self.edges], mapping[self.root])

    # -- io ---------------------------------------------------------------------------

    def to_text(self) -> str:
        lines = [f"{self.k} {len(self)} {self.root}"]
        lines.extend(" ".join(map(str, e)) for e in self.edges)
        return "\n".join(lines) + "\n"

    def to_json(self) -> dict:
        return {"k": self.k, "n": len(self), "root": self.root, "edges": [list(e) for e in self.edges]}

    @classmethod
    def from_text(cls, text: str) -> "LooseTree":
        rows = [line.split() for line in text.splitlines() if line.strip() and not line.startswith("#")]
        if not rows or len(rows[0]) != 3:
            raise FormatError("tree text must start with a 'k n root' header line")
        try:
            k, n, root = (int(t) for t in rows[0])
            edges = [tuple(int(t) for t in row) for row in rows[1:]]
        except ValueError as exc:
            raise FormatError(str(exc)) from exc
        try:
            tree = cls(k, edges, root)
        except ParameterError as exc:
            raise FormatError(str(exc)) from exc
        if len(tree) != n:
            raise FormatError(f"header says {n} vertices but the edges span {len(tree)}")
        return tree

    @classmethod
    def from_json(cls, data: dict | str) -> "LooseTree":
        if isinstance(data, str):
            data = json.loads(data)
        try:
            return cls(int(data["k"]), [tuple(e) for e in data["edges"]], int(data["root"]))
        except (KeyError, TypeError, ParameterError) as exc:
            raise FormatError(f"bad tree JSON: {exc}") from exc

    def __repr__(self) -> str:
        return f"LooseTree(k={self.k}, vertices={len(self)}, root={self.root})"


def validate(tree: LooseTree) -> TreeVerdict:
    """Full invariant check; returns the first violated property."""
    basic = check_edges(tree.k, tree.edges, tree.root)
    if not basic:
        return basic
    k = tree.k
    n_vertices = len(tree)
    if (n_vertices - 1) % (k - 1):
        return TreeVerdict(False, "vertex count is not 1 mod k-1")
    if len(tree.edges) != (n_vertices - 1) // (k - 1):
        return TreeVerdict(False, "edge count does not match vertex count")
    colour = tree.colour
    if colour[tree.root] != 1:
        return TreeVerdict(False, "root is not in colour class 1")
    layer = tree.layer
    if layer[tree.root] != 1:
        return TreeVerdict(False, "root is not in layer 1")
    foreign: dict[int, int] = {}
    for edge in tree.edges:
        if len({colour[v] for v in edge}) != k:
            return TreeVerdict(False, f"colour clash on edge {edge}")
        layers = sorted(layer[v] for v in edge)
        if layers != list(range(layers[0], layers[0] + k)):
            return TreeVerdict(False, f"edge {edge} does not occupy k consecutive layers")
        for v in edge:
            if layer[v] != layers[0]:
                foreign[v] = foreign.get(v, 0) + 1
    bad = [v for v, count in foreign.items() if count > 1]
    if bad:
        return TreeVerdict(False, f"vertex {bad[0]} lies in two edges not starting at its layer")
    return TreeVerdict(True)


# -- generators -----------------------------------------------------------------------


def binary_tree(k: int, r: int) -> LooseTree:
    """One edge, then r rounds of hanging a new edge on every current leaf."""
    if k < 2 or r < 0:
        raise ParameterError("binary_tree needs k >= 2 and r >= 0")
    edges = [tuple(range(k))]
    leaves = list(range(1, k))
    nxt = k
    for _ in range(r):
        new_leaves = []
        for leaf in leaves:
            edge = (leaf,) + tuple(range(nxt, nxt + k - 1))
            new_leaves.extend(edge[1:])
            nxt += k - 1
            edges.append(edge)
        leaves = new_leaves
    return LooseTree(k, edges, root=0)


def loose_path(k: int, n_edges: int) -> LooseTree:
    """Edges chained through their last vertex, rooted at an end vertex."""
    edges = []
    start = 0
    for _ in range(n_edges):
        edges.append(tuple(range(start, start + k)))
        start += k - 1
    return LooseTree(k, edges, root=0)


def random_tree(k: int, n: int, max_degree: int, seed: int, retries: int = 200) -> LooseTree:
    """Grow a tree by attaching edges at uniformly chosen vertices with spare degree.

    This is a fixture generator and not a uniform sampler.
    """
    if k < 2 or n < k or (n - 1) % (k - 1) or max_degree < 1:
        raise TreeGenerationError(f"no loose {k}-tree on {n} vertices with max degree {max_degree}")
    n_edges = (n - 1) // (k - 1)
    if n_edges > 1 and max_degree == 1:
        raise TreeGenerationError("trees with two or more edges have a vertex of degree 2")
    rng = random.Random(seed)
    for _ in range(retries):
        edges = [tuple(range(k))]
        deg = {v: 1 for v in range(k)}
        nxt = k
        ok = True
        for _ in range(n_edges - 1):
            open_vertices = [v for v in sorted(deg) if deg[v] < max_degree]
            if not open_vertices:
                ok = False
                break
            anchor = rng.choice(open_vertices)
            edge = (anchor,) + tuple(range(nxt, nxt + k - 1))
            nxt += k - 1
            deg[anchor] += 1
            for v in edge[1:]:
                deg[v] = 1
            edges.append(edge)
        if ok:
            return LooseTree(k, edges, root=0)
    raise TreeGenerationError(f"gave up after {retries} attempts")


def load_tree(path: str) -> LooseTree:
    with open(path, encoding="utf-8") as handle:
        text = handle.read()
    if text.lstrip().startswith("{"):
        return LooseTree.from_json(text)
    return LooseTree.from_text(text)


def save_tree(tree: LooseTree, path: str) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        if path.endswith(".json"):
            json.dump(tree.to_json(), handle, sort_keys=True)
            handle.write("\n")
        else:
            handle.write(tree.to_text())


# -- decomposition -----------------------------------------------------------------------


@dataclass(frozen=True)
class Decomposition:
    pieces: tuple[LooseTree, ...]
    attach: tuple[int | None, ...]
    """attach[i] is the index of the earlier piece containing piece i's root."""


def decompose(tree: LooseTree, target_size: int, max_degree: int | None = None) -> Decomposition:
    """Peel subtrees of size between ``target_size`` and ``k*Delta*target_size``.

    Pieces are returned so that each one's root lies in an earlier piece.
    """
    if target_size < 1:
        raise ParameterError("target_size must be positive")
    k = tree.k
    delta = tree.max_degree() if max_degree is None else max_degree
    upper = k * delta * target_size
    if target_size >= len(tree):
        return Decomposition((tree,), (None,))

    remaining_edges = list(tree.top_down_edges())
    peeled: list[LooseTree] = []
    while True:
        current = LooseTree(k, remaining_edges, root=tree.root)
        if len(current) <= upper:
            break
        sizes = current.subtree_sizes()
        chosen = None
        for v in current.bfs_order:
            if v == current.root or not current.child_edges(v):
                continue
            if not target_size <= sizes[v] <= upper:
                continue
            if all(sizes[u] <= target_size for e in current.child_edges(v) for u in e[1:]):
                chosen = v
                break
        if chosen is None:
            # the root qualifies only when the whole tree is small, handled above
            raise AssertionError("no peelable vertex; tree degree exceeds the declared bound")
        piece = current.subtree(chosen)
        assert piece is not None
        peeled.append(piece)
        drop = {tuple(sorted(e)) for e in piece.edges}
        remaining_edges = [e for e in current.top_down_edges() if tuple(sorted(e)) not in drop]
    rest = LooseTree(k, remaining_edges, root=tree.root)
    if peeled and len(rest) < target_size:
        # merge the remainder into the last peeled piece
        last = peeled.pop()
        rest = LooseTree(k, list(rest.top_down_edges()) + list(last.edges), root=tree.root)
    pieces = [rest] + peeled[::-1]
    located: dict[int, int] = {}
    attach: list[int | None] = []
    for i, piece in enumerate(pieces):
        attach.append(None if i == 0 else located[piece.root])
        for v in piece.vertices:
            located.setdefault(v, i)
    return Decomposition(tuple(pieces), tuple(attach))
