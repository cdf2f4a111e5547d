"""Exact and Monte Carlo laboratory for random regular graphs, their
matching decompositions, and couplings between them."""

from .graph import Graph, DegreeSequence, canonical_key, relabel, union_disjoint
from .oracle import Distribution, exact_distribution, exact_tv, mu, nu, compose

__all__ = ["Graph", "DegreeSequence", "canonical_key", "relabel", "union_disjoint",
           "Distribution", "exact_distribution", "exact_tv", "mu", "nu", "compose"]
__version__ = "0.1.0"
