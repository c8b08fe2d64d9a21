from __future__ import annotations

from itertools import combinations

from hypothesis import strategies as st

from looseembed.hypercore import Hypergraph


@st.composite
def hypergraphs(draw, k_values=(2, 3, 4), max_n=8, min_n=None):
    k = draw(st.sampled_from(k_values))
    n = draw(st.integers(min_value=k if min_n is None else max(min_n, k), max_value=max_n))
    all_edges = list(combinations(range(n), k))
    chosen = draw(st.lists(st.sampled_from(all_edges), max_size=min(len(all_edges), 40), unique=True))
    return Hypergraph(n, k, chosen)


@st.composite
def loose_trees_edges(draw, k_values=(2, 3, 4), max_edges=8):
    """Edge lists of loose trees grown by random leaf attachment."""
    k = draw(st.sampled_from(k_values))
    m = draw(st.integers(min_value=1, max_value=max_edges))
    edges = [tuple(range(k))]
    nxt = k
    for _ in range(m - 1):
        present = sorted({v for e in edges for v in e})
        anchor = draw(st.sampled_from(present))
        edges.append((anchor,) + tuple(range(nxt, nxt + k - 1)))
        nxt += k - 1
    return k, edges
