"""Numerical toolkit for Menger curvature, corona decompositions and curvature transport."""

from __future__ import annotations

__version__ = "0.1.0"

from .curvature import c2_auto, c2_point, c2_restricted, c2_total, cauchy_transform, k_operator, mv_identity_report
from .measure import WeightedPlanarMeasure, load_csv, normalize, save_csv
from .squares import DyadicSquare, Square

__all__ = [
    "DyadicSquare",
    "Square",
    "WeightedPlanarMeasure",
    "__version__",
    "c2_auto",
    "c2_point",
    "c2_restricted",
    "c2_total",
    "cauchy_transform",
    "k_operator",
    "load_csv",
    "mv_identity_report",
    "normalize",
    "save_csv",
]
