"""Loose hypertree embeddings in dense uniform hypergraphs.

Modules: ``hypercore`` (hypergraphs, shadows, links), ``loosetree`` (rooted
loose trees), ``homomorphism`` (reach and rotation certificates),
``matching`` (exact fractional matchings), ``robustgraph`` (G* and the
robustness certificate), ``embedder`` (absorption pipeline and oracle) and
``cli``.
"""
from .hypercore import FormatError, Hypergraph, ParameterError
from .loosetree import LooseTree

__all__ = ["FormatError", "Hypergraph", "LooseTree", "ParameterError"]
__version__ = "0.1.0"
