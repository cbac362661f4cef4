"""Feasible-measure lower bounds for analytic capacity."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .curvature import c2_total
from .errors import EmptySupportError
from .measure import WeightedPlanarMeasure, growth_scan, min_pairwise_distance, total_mass

FEASIBILITY_TOL = 1e-9


@dataclass(frozen=True)
class CapacityParams:
    passes: int = 50
    step: float = 0.1
    seed: int = 0
    eta: float = 1.0
    resolution: float | None = None

    def __post_init__(self):
        if self.passes < 0:
            raise ValueError("passes must be >= 0")
        if not self.step > 0:
            raise ValueError("step must be > 0")
        if not self.eta > 0:
            raise ValueError("eta must be > 0")

    def to_json(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class FeasibilityReport:
    growth_ok: bool
    growth_ratio: float          # max mu(B(x, r)) / r over the scan
    curvature_ok: bool
    curvature_ratio: float       # c^2(mu) / mu(E)
    scale_applied: float = 1.0
    resolution: float = 0.0

    @property
    def feasible(self) -> bool:
        return self.growth_ok and self.curvature_ok

    def to_json(self) -> dict:
        return asdict(self) | {"feasible": self.feasible}


@dataclass(frozen=True)
class CapacityEstimate:
    value: float
    measure: WeightedPlanarMeasure
    report: FeasibilityReport
    params: CapacityParams
    accepted: int = 0

    def to_json(self) -> dict:
        return {
            "value": self.value,
            "eta": self.params.eta,
            "resolution": self.report.resolution,
            "passes": self.params.passes,
            "accepted": self.accepted,
            "seed": self.params.seed,
            "feasibility": self.report.to_json(),
        }


def _growth(xs, ys, ws, h) -> float:
    return growth_scan(xs, ys, ws, h)[0] if xs.size else 0.0


def _c2(xs, ys, ws) -> float:
    return c2_total(WeightedPlanarMeasure(xs, ys, ws)).value


def verify_feasibility(m: WeightedPlanarMeasure, resolution: float | None = None, eta: float = 1.0) -> FeasibilityReport:
    """Exhaustive growth scan above ``resolution`` and exact ``c^2(mu) <= mu(E)`` check."""
    if m.n == 0:
        return FeasibilityReport(True, 0.0, True, 0.0, 1.0, 0.0 if resolution is None else float(resolution))
    h = min_pairwise_distance(m.xs, m.ys) if resolution is None else float(resolution)
    if not math.isfinite(h):
        h = 0.0
    g = _growth(m.xs, m.ys, m.ws, h) / eta if h > 0 else math.inf
    mass = total_mass(m)
    c2 = _c2(m.xs, m.ys, m.ws)
    cr = c2 / mass if mass > 0 else 0.0
    return FeasibilityReport(g <= 1 + FEASIBILITY_TOL, g, cr <= 1 + FEASIBILITY_TOL, cr, 1.0, h)


def _project(xs, ys, ws, h, eta) -> tuple[np.ndarray, float]:
    """Growth projection then curvature projection; returns new weights and the total factor."""
    g = _growth(xs, ys, ws, h) / eta
    ws = ws / g
    mass = math.fsum(ws)
    c2 = _c2(xs, ys, ws)
    t = 1.0 if c2 <= mass else math.sqrt(mass / c2)
    return ws * t, t / g


def _support(points) -> np.ndarray:
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    if pts.shape[0] == 0:
        raise EmptySupportError("support is empty")
    # keep first occurrences, in input order
    _, first = np.unique(pts, axis=0, return_index=True)
    return pts[np.sort(first)]


def estimate_alpha(support, params: CapacityParams | None = None) -> CapacityEstimate:
    """Largest mass found among measures on ``support`` with ``mu(B(x,r)) <= eta r`` and ``c^2 <= mass``."""
    params = params or CapacityParams()
    pts = _support(support)
    xs, ys = np.ascontiguousarray(pts[:, 0]), np.ascontiguousarray(pts[:, 1])
    n = xs.size
    if n == 1:
        h = 0.0 if params.resolution is None else float(params.resolution)
        return CapacityEstimate(0.0, WeightedPlanarMeasure.empty(), FeasibilityReport(True, 0.0, True, 0.0, 0.0, h), params)
    h = min_pairwise_distance(xs, ys) if params.resolution is None else float(params.resolution)
    # start at weight diam(E): every ball ratio is then >= 1, so projections only shrink weights
    diam = float(max(np.ptp(xs), np.ptp(ys), h))
    w0 = np.full(n, diam)
    ws, factor = _project(xs, ys, w0, h, params.eta)
    mass = math.fsum(ws)
    rng = np.random.Generator(np.random.Philox(params.seed))
    accepted = 0
    for _ in range(params.passes):
        pick = rng.random(n) < 0.5
        trial = np.where(pick, ws * (1 + params.step), ws)
        tw, _ = _project(xs, ys, trial, h, params.eta)
        tm = math.fsum(tw)
        if tm > mass:
            ws, mass = tw, tm
            accepted += 1
    meas = WeightedPlanarMeasure(xs, ys, ws)
    rep = verify_feasibility(meas, h, params.eta)
    rep = FeasibilityReport(rep.growth_ok, rep.growth_ratio, rep.curvature_ok, rep.curvature_ratio, factor, h)
    return CapacityEstimate(mass, meas, rep, params, accepted)


def estimate_gamma(support, params: CapacityParams | None = None) -> CapacityEstimate:
    """As :func:`estimate_alpha` with the plain linear-growth bound ``mu(B(x,r)) <= r``."""
    params = params or CapacityParams()
    if params.eta != 1.0:
        params = CapacityParams(params.passes, params.step, params.seed, 1.0, params.resolution)
    return estimate_alpha(support, params)
