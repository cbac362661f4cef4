"""Planar maps with known bilipschitz constants, pushforwards and transport experiments."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .curvature import c2_auto
from .errors import BadSpecError, MapUndefinedError, TooFewAtomsError
from .generators import piecewise_linear
from .measure import WeightedPlanarMeasure, total_mass


def _graph_L(slope: float) -> float:
    """Bilipschitz constant of ``(x, y) -> (x, y + A(x))`` with ``|A'| <= slope``."""
    return (slope + math.sqrt(slope * slope + 4.0)) / 2.0


@dataclass(frozen=True)
class BilipschitzMapSpec:
    kind: str                        # affine | shear | graph_shift | split_translate | composition
    params: tuple = ()
    declared_L: float = 1.0
    stages: tuple = ()               # composition stages, applied first to last
    not_bilipschitz: bool = False

    # ---------------------------------------------------------- constructors

    @classmethod
    def affine(cls, a, b, c, d, tx=0.0, ty=0.0) -> BilipschitzMapSpec:
        M = np.array([[a, b], [c, d]], dtype=float)
        s = np.linalg.svd(M, compute_uv=False)
        # singular up to rounding: the smallest singular value of a rank-one matrix comes out near eps * s[0]
        if not np.all(np.isfinite(s)) or s[1] <= 64 * np.finfo(float).eps * s[0]:
            return cls("affine", (a, b, c, d, tx, ty), math.inf, not_bilipschitz=True)
        return cls("affine", tuple(float(v) for v in (a, b, c, d, tx, ty)), float(max(s[0], 1.0 / s[1])))

    @classmethod
    def rotation(cls, angle: float, tx: float = 0.0, ty: float = 0.0) -> BilipschitzMapSpec:
        c, s = math.cos(angle), math.sin(angle)
        return cls("affine", (c, -s, s, c, float(tx), float(ty)), 1.0)

    @classmethod
    def shear(cls, lam: float) -> BilipschitzMapSpec:
        """``(x, y) -> (x, lam y)``."""
        lam = float(lam)
        if not (lam > 0 and math.isfinite(lam)):
            raise BadSpecError("shear factor must be positive and finite")
        return cls("shear", (lam,), max(lam, 1.0 / lam))

    @classmethod
    def graph_shift(cls, breakpoints) -> BilipschitzMapSpec:
        """``(x, y) -> (x, y + A(x))`` with ``A`` piecewise linear, constant beyond the ends."""
        bp = tuple(tuple(float(v) for v in p) for p in breakpoints)
        arr = np.array(bp)
        piecewise_linear(arr, np.zeros(1))  # validates
        slope = float(np.max(np.abs(np.diff(arr[:, 1]) / np.diff(arr[:, 0]))))
        return cls("graph_shift", bp, _graph_L(slope))

    @classmethod
    def split_translate(cls) -> BilipschitzMapSpec:
        """``z -> z`` for ``Re z >= 0`` and ``z + i`` otherwise (not bilipschitz)."""
        return cls("split_translate", (), math.inf, not_bilipschitz=True)

    @classmethod
    def compose(cls, stages) -> BilipschitzMapSpec:
        stages = tuple(stages)
        if not stages:
            raise BadSpecError("composition needs at least one stage")
        L = math.prod(s.declared_L for s in stages)
        return cls("composition", (), L, stages, any(s.not_bilipschitz for s in stages))

    @classmethod
    def parse(cls, text: str) -> BilipschitzMapSpec:
        """``affine:a,b,c,d,tx,ty``, ``shear:L``, ``graph:x,y;x,y``, ``split``, ``compose:S1|S2|...``."""
        text = text.strip()
        kind, _, rest = text.partition(":")
        try:
            if kind == "compose":
                return cls.compose(cls.parse(p) for p in rest.split("|"))
            if kind == "affine":
                vals = [float(v) for v in rest.split(",")]
                if len(vals) == 4:
                    vals += [0.0, 0.0]
                if len(vals) != 6:
                    raise BadSpecError("affine needs 4 or 6 numbers")
                return cls.affine(*vals)
            if kind == "shear":
                return cls.shear(float(rest))
            if kind == "graph":
                return cls.graph_shift([tuple(float(v) for v in p.split(",")) for p in rest.split(";")])
            if kind == "split" and not rest:
                return cls.split_translate()
        except ValueError as exc:
            raise BadSpecError(f"bad map spec {text!r}: {exc}") from None
        raise BadSpecError(f"bad map spec {text!r}")

    # ---------------------------------------------------------- evaluation

    def apply(self, xs, ys) -> tuple[np.ndarray, np.ndarray]:
        xs = np.asarray(xs, dtype=float)
        ys = np.asarray(ys, dtype=float)
        if self.kind == "affine":
            a, b, c, d, tx, ty = self.params
            return a * xs + b * ys + tx, c * xs + d * ys + ty
        if self.kind == "shear":
            return xs.copy(), self.params[0] * ys
        if self.kind == "graph_shift":
            return xs.copy(), ys + piecewise_linear(np.array(self.params), xs)
        if self.kind == "split_translate":
            return xs.copy(), np.where(xs < 0, ys + 1.0, ys)
        if self.kind == "composition":
            for k, st in enumerate(self.stages):
                xs, ys = st.apply(xs, ys)
                if not (np.all(np.isfinite(xs)) and np.all(np.isfinite(ys))):
                    raise MapUndefinedError(f"stage {k} ({st.kind}) produced non-finite points")
            return xs, ys
        raise BadSpecError(f"unknown map kind {self.kind!r}")

    def to_json(self) -> dict:
        out = {
            "kind": self.kind,
            "params": [list(p) if isinstance(p, tuple) else p for p in self.params],
            "declared_L": self.declared_L if math.isfinite(self.declared_L) else None,
            "not_bilipschitz": self.not_bilipschitz,
        }
        if self.stages:
            out["stages"] = [s.to_json() for s in self.stages]
        return out


def pushforward(phi: BilipschitzMapSpec, m: WeightedPlanarMeasure) -> WeightedPlanarMeasure:
    """Image measure: atoms mapped pointwise, weights and order kept."""
    with np.errstate(over="ignore", invalid="ignore"):
        xs, ys = phi.apply(m.xs, m.ys)
    if not (np.all(np.isfinite(xs)) and np.all(np.isfinite(ys))):
        raise MapUndefinedError(f"{phi.kind} produced non-finite points")
    return WeightedPlanarMeasure(xs, ys, m.ws, m.name)


def distortion_ratios(phi: BilipschitzMapSpec, m: WeightedPlanarMeasure, i, j) -> np.ndarray:
    px, py = phi.apply(m.xs, m.ys)
    d0 = np.hypot(m.xs[i] - m.xs[j], m.ys[i] - m.ys[j])
    d1 = np.hypot(px[i] - px[j], py[i] - py[j])
    ok = d0 > 0
    return d1[ok] / d0[ok]


def empirical_bilip(phi: BilipschitzMapSpec, m: WeightedPlanarMeasure, pairs: int = 10000, seed: int = 0) -> tuple[float, float]:
    """Min and max of ``|phi(z) - phi(w)| / |z - w|`` over seeded pairs of distinct atoms."""
    if m.n < 2:
        raise TooFewAtomsError("empirical_bilip needs at least 2 atoms")
    rng = np.random.Generator(np.random.Philox(seed))
    i = rng.integers(0, m.n, size=pairs)
    j = (i + 1 + rng.integers(0, m.n - 1, size=pairs)) % m.n
    r = distortion_ratios(phi, m, i, j)
    if r.size == 0:
        raise TooFewAtomsError("all sampled pairs are coincident")
    return float(r.min()), float(r.max())


@dataclass(frozen=True)
class TransportReport:
    c2_before: float
    c2_after: float
    mass: float
    ratio_teocurv: float
    empirical_L: tuple
    method: str                      # exact | monte_carlo
    not_bilipschitz: bool = False
    details: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "c2_before": self.c2_before,
            "c2_after": self.c2_after,
            "mass": self.mass,
            "ratio_teocurv": self.ratio_teocurv,
            "empirical_L": list(self.empirical_L),
            "method": self.method,
            "monte_carlo": self.method != "exact",
            "not_bilipschitz": self.not_bilipschitz,
            **self.details,
        }


def teocurv_experiment(
    phi: BilipschitzMapSpec,
    m: WeightedPlanarMeasure,
    cutoff: int = 400,
    samples: int = 10**6,
    seed: int = 0,
    pairs: int = 10000,
) -> TransportReport:
    """``c^2(phi# mu) / (mu(E) + c^2(mu))``; exact up to ``cutoff`` atoms, sampled above."""
    img = pushforward(phi, m)
    before = c2_auto(m, 0.0, cutoff, samples, seed)
    after = c2_auto(img, 0.0, cutoff, samples, seed)
    mass = total_mass(m)
    den = mass + before.value
    ratio = after.value / den if den > 0 else 0.0
    emp = empirical_bilip(phi, m, pairs, seed) if m.n >= 2 else (1.0, 1.0)
    details = {}
    if before.method != "exact":
        details = {"stderr_before": before.stderr, "stderr_after": after.stderr, "samples": samples, "seed": seed}
    return TransportReport(before.value, after.value, mass, ratio, emp, before.method, phi.not_bilipschitz, details)


def capacity_ratio_experiment(phi: BilipschitzMapSpec, m: WeightedPlanarMeasure, params=None) -> dict:
    """Capacity estimates of the support before and after the map, and their ratio."""
    from .capacity import CapacityParams, estimate_gamma

    params = params or CapacityParams()
    img = pushforward(phi, m)
    before = estimate_gamma(np.stack([m.xs, m.ys], axis=1), params)
    after = estimate_gamma(np.stack([img.xs, img.ys], axis=1), params)
    ratio = after.value / before.value if before.value > 0 else math.nan
    return {
        "gamma_est_before": before.value,
        "gamma_est_after": after.value,
        "ratio": ratio,
        "not_bilipschitz": phi.not_bilipschitz,
        "map": phi.to_json(),
        "params": params.to_json(),
    }
