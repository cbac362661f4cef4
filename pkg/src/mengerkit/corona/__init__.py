"""Stopping-time decomposition of a measure into trees of top squares."""

from __future__ import annotations

from .allocate import Allocation, allocate_on_curve
from .build import (
    CoronaDecomposition,
    TopSquare,
    build_top,
    density_audit,
    packing_audit,
    root_square,
    stop_overlap,
    verify_structure,
)
from .classify import BadSquare, Classification, CoronaContext, CoronaParams, build_bad, classify_square, wrap_four_dyadic
from .kset import KSet, ell_x, k_set, quasi_stop_squares

__all__ = [
    "Allocation",
    "BadSquare",
    "Classification",
    "CoronaContext",
    "CoronaDecomposition",
    "CoronaParams",
    "KSet",
    "TopSquare",
    "allocate_on_curve",
    "build_bad",
    "build_top",
    "classify_square",
    "density_audit",
    "ell_x",
    "k_set",
    "packing_audit",
    "quasi_stop_squares",
    "root_square",
    "stop_overlap",
    "verify_structure",
    "wrap_four_dyadic",
]
