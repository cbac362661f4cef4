"""Deterministic and seeded test measures."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import BadSpecError
from .measure import WeightedPlanarMeasure

DEFAULT_GRAPH = ((0.0, 0.5), (0.5, 0.6), (1.0, 0.5))


def cantor4(depth: int) -> WeightedPlanarMeasure:
    """``4^depth`` atoms of weight ``4^-depth`` at the cell centres of the corner Cantor set."""
    if depth < 0:
        raise BadSpecError("cantor4 depth must be >= 0")
    xs = np.zeros(1)
    ys = np.zeros(1)
    s = 1.0
    for _ in range(depth):
        s /= 4
        off = np.array([0.0, 3 * s])
        xs = (xs[:, None] + off[None, :]).repeat(2, axis=1).ravel()
        ys = np.tile((ys[:, None] + off[None, :]), (1, 2)).ravel()
    n = xs.size
    return WeightedPlanarMeasure(xs + s / 2, ys + s / 2, np.full(n, 1.0 / n), f"cantor4({depth})")


def segment(n: int) -> WeightedPlanarMeasure:
    """``n`` equally spaced atoms on ``[0, 1] x {0}`` of weight ``1/n``."""
    if n < 1:
        raise BadSpecError("segment needs n >= 1")
    xs = np.arange(n) / (n - 1) if n > 1 else np.zeros(1)
    return WeightedPlanarMeasure(xs, np.zeros(n), np.full(n, 1.0 / n), f"segment({n})")


def circle(n: int, radius: float = 0.375) -> WeightedPlanarMeasure:
    """``n`` equally spaced atoms on a circle centred at ``(1/2, 1/2)``."""
    if n < 1:
        raise BadSpecError("circle needs n >= 1")
    t = 2 * np.pi * np.arange(n) / n
    return WeightedPlanarMeasure(0.5 + radius * np.cos(t), 0.5 + radius * np.sin(t), np.full(n, 1.0 / n), f"circle({n})")


def piecewise_linear(breakpoints, x: np.ndarray) -> np.ndarray:
    """Evaluate the interpolant through ``breakpoints``; constant beyond the end points."""
    bp = np.asarray(breakpoints, dtype=float)
    if bp.ndim != 2 or bp.shape[1] != 2 or bp.shape[0] < 2 or np.any(np.diff(bp[:, 0]) <= 0):
        raise BadSpecError("breakpoints must be >= 2 (x, y) pairs with increasing x")
    return np.interp(x, bp[:, 0], bp[:, 1])


def lipschitz_graph(breakpoints=DEFAULT_GRAPH, n: int = 1000) -> WeightedPlanarMeasure:
    """``n`` atoms on the graph of a piecewise-linear function, equally spaced in x."""
    if n < 2:
        raise BadSpecError("lipschitz_graph needs n >= 2")
    bp = np.asarray(breakpoints, dtype=float)
    xs = np.linspace(bp[0, 0], bp[-1, 0], n)
    return WeightedPlanarMeasure(xs, piecewise_linear(bp, xs), np.full(n, 1.0 / n), f"lipschitz_graph({n})")


def grid(n: int) -> WeightedPlanarMeasure:
    """``n x n`` cell centres of the unit square, weight ``1/n^2``."""
    if n < 1:
        raise BadSpecError("grid needs n >= 1")
    c = (np.arange(n) + 0.5) / n
    xx, yy = np.meshgrid(c, c, indexing="ij")
    return WeightedPlanarMeasure(xx.ravel(), yy.ravel(), np.full(n * n, 1.0 / (n * n)), f"grid({n})")


def random_cloud(n: int, seed: int = 0) -> WeightedPlanarMeasure:
    """``n`` uniform atoms in ``[0, 1)^2`` with weights ``1/n``."""
    if n < 1:
        raise BadSpecError("random_cloud needs n >= 1")
    rng = np.random.Generator(np.random.Philox(seed))
    pts = rng.random((n, 2))
    return WeightedPlanarMeasure(pts[:, 0], pts[:, 1], np.full(n, 1.0 / n), f"random_cloud({n},{seed})")


@dataclass(frozen=True)
class GeneratorSpec:
    kind: str
    n: int = 0
    seed: int = 0
    breakpoints: tuple = DEFAULT_GRAPH

    @classmethod
    def parse(cls, text: str) -> GeneratorSpec:
        """``cantor4:D``, ``segment:N``, ``circle:N``, ``grid:N``, ``random:N[:SEED]``, ``graph:N[:x,y;x,y;...]``."""
        parts = text.strip().split(":")
        kind = parts[0]
        try:
            if kind in ("cantor4", "segment", "circle", "grid") and len(parts) == 2:
                return cls(kind, int(parts[1]))
            if kind == "random" and len(parts) in (2, 3):
                return cls("random_cloud", int(parts[1]), int(parts[2]) if len(parts) == 3 else 0)
            if kind == "graph" and len(parts) in (2, 3):
                bp = DEFAULT_GRAPH
                if len(parts) == 3:
                    bp = tuple(tuple(float(v) for v in pair.split(",")) for pair in parts[2].split(";"))
                return cls("lipschitz_graph", int(parts[1]), breakpoints=bp)
        except ValueError as exc:
            raise BadSpecError(f"bad generator spec {text!r}: {exc}") from None
        raise BadSpecError(f"bad generator spec {text!r}")

    def to_json(self) -> dict:
        return {"kind": self.kind, "n": self.n, "seed": self.seed, "breakpoints": [list(p) for p in self.breakpoints]}


def generate(spec: GeneratorSpec | str) -> WeightedPlanarMeasure:
    if isinstance(spec, str):
        spec = GeneratorSpec.parse(spec)
    if spec.kind == "cantor4":
        return cantor4(spec.n)
    if spec.kind == "segment":
        return segment(spec.n)
    if spec.kind == "circle":
        return circle(spec.n)
    if spec.kind == "grid":
        return grid(spec.n)
    if spec.kind == "random_cloud":
        return random_cloud(spec.n, spec.seed)
    if spec.kind == "lipschitz_graph":
        return lipschitz_graph(spec.breakpoints, spec.n)
    raise BadSpecError(f"unknown generator kind {spec.kind!r}")
