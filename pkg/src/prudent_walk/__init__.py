"""Excursion-renewal toolkit for the uniform two-dimensional prudent walk."""

from prudent_walk.lattice_core import LatticePath, Step

__all__ = ["LatticePath", "Step"]
__version__ = "0.1.0"
