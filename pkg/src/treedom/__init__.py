"""Exact path probabilities on trees, tree domination, and first-passage percolation on spherically symmetric trees."""

__version__ = "0.1.0"
