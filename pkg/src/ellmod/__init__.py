"""Exact-arithmetic B-model computations for the simple elliptic families P8, X9 and J10."""

__version__ = "0.1.0"
