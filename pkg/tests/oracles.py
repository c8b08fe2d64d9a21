"""Naive reference implementations used as test oracles.

Everything here works from the raw edge list by exhaustive enumeration and
shares no code with the package beyond the Hypergraph container.
"""
from __future__ import annotations

from itertools import combinations


def shadow_oracle(edges, j):
    out = set()
    for e in edges:
        for sub in combinations(sorted(e), j):
            out.add(sub)
    return out


def link_oracle(edges, subset):
    s = set(subset)
    return {tuple(sorted(set(e) - s)) for e in edges if s <= set(e)}


def tight_components_oracle(edges, k):
    """Components by repeated merging over every pair of edges."""
    edges = sorted(tuple(sorted(e)) for e in edges)
    label = {e: i for i, e in enumerate(edges)}
    changed = True
    while changed:
        changed = False
        for a, b in combinations(edges, 2):
            if len(set(a) & set(b)) == k - 1 and label[a] != label[b]:
                low = min(label[a], label[b])
                high = max(label[a], label[b])
                for e in edges:
                    if label[e] == high:
                        label[e] = low
                changed = True
    groups = {}
    for e, g in label.items():
        groups.setdefault(g, set()).add(e)
    return {frozenset(g) for g in groups.values()}


def degree_oracle(edges, subset):
    s = set(subset)
    return sum(1 for e in edges if s <= set(e))


def max_matching_size_oracle(edges):
    """Largest set of pairwise disjoint edges, by exhaustive search."""
    edges = [frozenset(e) for e in edges]

    def rec(i, used):
        if i == len(edges):
            return 0
        best = rec(i + 1, used)
        if used.isdisjoint(edges[i]):
            best = max(best, 1 + rec(i + 1, used | edges[i]))
        return best

    return rec(0, frozenset())


def perfect_matching_oracle(edges, vertices):
    """A set of pairwise disjoint edges covering ``vertices`` or None."""
    vertices = set(vertices)
    edges = [tuple(e) for e in edges]

    def rec(left, chosen):
        if not left:
            return list(chosen)
        v = min(left)
        for e in edges:
            if v in e and set(e) <= left:
                found = rec(left - set(e), chosen + [e])
                if found is not None:
                    return found
        return None

    return rec(frozenset(vertices), [])


def spanning_embedding_oracle(graph_edges, n, tree_edges, tree_vertices):
    """Exhaustive injective map search; True when the tree embeds spanning."""
    if len(tree_vertices) != n:
        return False
    edge_set = {frozenset(e) for e in graph_edges}
    order = sorted(tree_vertices)
    tree_edges = [tuple(e) for e in tree_edges]

    def ok(phi):
        for e in tree_edges:
            if all(v in phi for v in e) and frozenset(phi[v] for v in e) not in edge_set:
                return False
        return True

    def rec(i, phi, used):
        if i == len(order):
            return True
        for w in range(n):
            if w in used:
                continue
            phi[order[i]] = w
            if ok(phi) and rec(i + 1, phi, used | {w}):
                return True
            del phi[order[i]]
        return False

    return rec(0, {}, frozenset())


def homomorphism_root_images(graph_edges, n, tree_edges, root, allowed):
    """Root images admitting a homomorphism of the rooted tree.

    ``allowed(v)`` returns the admissible images of tree vertex v or None.
    Plain depth-first search over vertex images, edge by edge from the root.
    """
    edge_set = {frozenset(e) for e in graph_edges}
    tree_edges = [tuple(e) for e in tree_edges]

    def domain(v):
        a = allowed(v)
        return range(n) if a is None else sorted(a)

    def rec(i, phi):
        if i == len(tree_edges):
            return True
        edge = tree_edges[i]
        anchor = next(v for v in edge if v in phi)
        kids = [v for v in edge if v != anchor]
        choices = [list(domain(v)) for v in kids]

        def fill(j, images):
            if j == len(kids):
                full = {phi[anchor], *images}
                if len(full) != len(edge) or frozenset(full) not in edge_set:
                    return False
                for v, w in zip(kids, images):
                    phi[v] = w
                if rec(i + 1, phi):
                    return True
                for v in kids:
                    del phi[v]
                return False
            for w in choices[j]:
                if w != phi[anchor] and w not in images and fill(j + 1, images + [w]):
                    return True
            return False

        return fill(0, [])

    out = set()
    for w in domain(root):
        if rec(0, {root: w}):
            out.add(w)
    return out
