"""Eigenray diagrams, nodal integral affine planes, Novikov-ring homological
algebra, Kontsevich-Soibelman algebras over polygons and numerical checks of
the four-dimensional local models."""

from .affine import IntegralAffineMap, PLShear, compose, linear_shear
from .diagram import EigenrayDiagram, Node, Ray, validate
from .nodal import ChartAtlas, holonomy, trace_geodesic

__version__ = "0.1.0"

__all__ = [
    "ChartAtlas",
    "EigenrayDiagram",
    "IntegralAffineMap",
    "Node",
    "PLShear",
    "Ray",
    "compose",
    "holonomy",
    "linear_shear",
    "trace_geodesic",
    "validate",
]
