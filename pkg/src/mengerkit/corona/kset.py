"""Quasi-stopping squares, the scale function l_x and the set K of a top square."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..dyadic import find_balanced_ancestor
from ..measure import WeightedPlanarMeasure, delta
from ..squares import Square
from .build import CoronaDecomposition
from .classify import CoronaContext


def ell_x(x, R, stop_squares, good_atoms) -> float:
    """``min(inf_Q l(Q) + dist(x, Q)/40, dist(x, G)/40)``; ``R`` only fixes the setting."""
    px, py = float(x[0]), float(x[1])
    best = math.inf
    for q in stop_squares:
        s = q.as_square()
        best = min(best, s.side + s.dist_to_point(px, py) / 40)
    g = np.asarray(good_atoms, dtype=float).reshape(-1, 2)
    if g.size:
        best = min(best, float(np.hypot(g[:, 0] - px, g[:, 1] - py).min()) / 40)
    return best


def ell_many(xs, ys, squares, good) -> np.ndarray:
    """Vectorised :func:`ell_x` over many points."""
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    out = np.full(xs.shape, math.inf)
    for q in squares:
        s = q.as_square()
        out = np.minimum(out, s.side + s.dist_to_points(xs, ys) / 40)
    g = np.asarray(good, dtype=float).reshape(-1, 2)
    for k in range(g.shape[0]):
        out = np.minimum(out, np.hypot(xs - g[k, 0], ys - g[k, 1]) / 40)
    return out


@dataclass(frozen=True)
class QuasiStop:
    stop: Square
    square: Square
    fallback: bool      # no balanced ancestor passed the checks; the stop square is used
    delta: float        # delta_mu(stop, square), 0 for fallbacks


def quasi_stop_squares(d: CoronaDecomposition, R, m: WeightedPlanarMeasure, c_delta: float = 10.0) -> list[QuasiStop]:
    """Balanced ancestors ``Q~`` of the stop squares with ``delta_mu(Q, Q~) <= c_delta A theta(R)``."""
    ctx = d.context or CoronaContext(m, d.resolution)
    p = d.params
    theta_r = ctx.mass(R) / R.side
    out = []
    for q in d.stop(R):
        sq = q.as_square()
        found = find_balanced_ancestor(m, sq, R, a=1 / 40, b=p.b_balance)
        if found is not None:
            cand, _ = found
            dl = delta(m, sq, cand)
            if 2 * sq.side <= cand.side <= 8 * R.side and dl <= c_delta * p.A * theta_r:
                out.append(QuasiStop(sq, cand, False, dl))
                continue
        out.append(QuasiStop(sq, sq, True, 0.0))
    return out


@dataclass(frozen=True)
class KSet:
    points: np.ndarray          # (k, 2), good atoms first, then the a_Q in stop order
    good: np.ndarray            # atom indices of G(R)
    representatives: list       # per stop square: atom index of a_Q, or -1
    quasi: list                 # QuasiStop entries
    ell: np.ndarray             # l_x at every point of K
    dist_ratio: float           # max dist(a_Q, Q) / l(Q)
    separation: float           # smallest C with K cap B(x, l_x / C) = {x}
    fallbacks: int

    def to_json(self) -> dict:
        return {
            "points": self.points.tolist(),
            "good_atoms": [int(i) for i in self.good],
            "representatives": self.representatives,
            "quasi_stop": [
                {"stop": q.stop.to_json(), "square": q.square.to_json(), "fallback": q.fallback, "delta": q.delta}
                for q in self.quasi
            ],
            "dist_ratio": self.dist_ratio,
            "separation": self.separation,
            "fallbacks": self.fallbacks,
        }


def k_set(R, d: CoronaDecomposition, m: WeightedPlanarMeasure) -> KSet:
    """``K = G(R)`` plus, per stop square ``Q``, the atom of ``3Q`` minimising ``l_x``."""
    good = d.good(R)
    gpts = np.stack([m.xs[good], m.ys[good]], axis=1) if good.size else np.zeros((0, 2))
    quasi = quasi_stop_squares(d, R, m)
    fam = [q.square for q in quasi]
    reps, ratios = [], []
    pts = [tuple(p) for p in gpts.tolist()]
    seen = set(pts)
    for q in quasi:
        t3 = q.stop.scaled(3.0)
        idx = np.flatnonzero(t3.contains_mask(m.xs, m.ys))
        if idx.size == 0:
            reps.append(-1)
            continue
        ell = ell_many(m.xs[idx], m.ys[idx], fam, gpts)
        a = int(idx[int(np.argmin(ell))])
        reps.append(a)
        ratios.append(q.stop.dist_to_point(float(m.xs[a]), float(m.ys[a])) / q.stop.side)
        p = (float(m.xs[a]), float(m.ys[a]))
        if p not in seen:
            seen.add(p)
            pts.append(p)
    K = np.array(pts, dtype=float).reshape(-1, 2)
    ellK = ell_many(K[:, 0], K[:, 1], fam, gpts) if K.size else np.zeros(0)
    sep = 0.0
    if K.shape[0] > 1:
        for t in range(K.shape[0]):
            if ellK[t] <= 0:
                continue
            dd = np.hypot(K[:, 0] - K[t, 0], K[:, 1] - K[t, 1])
            dd[t] = math.inf
            sep = max(sep, float(ellK[t] / dd.min()))
    return KSet(K, good, reps, quasi, ellK, max(ratios, default=0.0), sep, sum(q.fallback for q in quasi))
