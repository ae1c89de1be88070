"""Invariant tensor decompositions on weighted simplicial complexes."""
