"""Dyadic-grid laboratory for multilinear fractional maximal and integral operators."""

from ._backend import BACKEND
from .exponents import ExponentConfig
from .grid import CubeFamily, DyadicCube, GridCube, GridFunction

__version__ = "0.1.0"

__all__ = ["BACKEND", "CubeFamily", "DyadicCube", "ExponentConfig", "GridCube",
           "GridFunction", "__version__"]
