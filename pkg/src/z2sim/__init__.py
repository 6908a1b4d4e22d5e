"""Exact-diagonalization toolkit for Z2 lattice gauge theories coupled to
dynamical matter on triangular plaquette lattices."""

__version__ = "0.1.0"

from .lattice import LatticeGeometry, chain_of_plaquettes, preset

__all__ = ["LatticeGeometry", "chain_of_plaquettes", "preset", "__version__"]
