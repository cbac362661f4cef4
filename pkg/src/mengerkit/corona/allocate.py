"""Greedy spreading of square masses onto a curve with bounded overlap."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..errors import CurveMissesSquareError
from ..jones import Polyline


def _clip_params(curve: Polyline, sq) -> list[tuple[float, float]]:
    """Liang-Barsky clipping of every segment against the closed square; arc-length intervals."""
    s = sq.as_square()
    bp = curve.breakpoints
    out = []
    for k, (p, q) in enumerate(zip(curve.starts, curve.ends)):
        d = q - p
        t0, t1 = 0.0, 1.0
        ok = True
        for pk, qk in ((-d[0], p[0] - s.x0), (d[0], s.x1 - p[0]), (-d[1], p[1] - s.y0), (d[1], s.y1 - p[1])):
            if pk == 0:
                if qk < 0:
                    ok = False
                    break
                continue
            r = qk / pk
            if pk < 0:
                t0 = max(t0, r)
            else:
                t1 = min(t1, r)
        if ok and t1 > t0:
            L = bp[k + 1] - bp[k]
            out.append((bp[k] + t0 * L, bp[k] + t1 * L))
    return out


@dataclass(frozen=True)
class Allocation:
    order: list                 # processing order (indices into the inputs)
    edges: np.ndarray           # arc-length breakpoints of the common refinement
    inside: np.ndarray          # (pieces, squares) piece-in-enlarged-square flags
    support: np.ndarray         # (pieces, squares) piece-in-A_i flags
    alphas: np.ndarray          # density value of g_i on A_i
    masses: np.ndarray
    theta: float
    c27: float
    co1_error: float            # max relative mismatch of the integral against the mass
    co2: float                  # sup_s sum_i g_i(s) / theta
    co3: float                  # max ||g_i||_inf l(Q~_i) / mass_i

    @property
    def piece_lengths(self) -> np.ndarray:
        return np.diff(self.edges)

    def density(self, i: int, s) -> np.ndarray:
        """``g_i`` at arc-length parameters ``s``."""
        s = np.atleast_1d(np.asarray(s, dtype=float))
        k = np.clip(np.searchsorted(self.edges, s, side="right") - 1, 0, len(self.edges) - 2)
        return np.where(self.support[k, i], self.alphas[i], 0.0)

    def total(self) -> np.ndarray:
        """``sum_i g_i`` on every piece."""
        return self.support.astype(float) @ self.alphas

    def integrals(self) -> np.ndarray:
        L = self.piece_lengths
        return np.array([self.alphas[i] * math.fsum(L[self.support[:, i]]) for i in range(len(self.alphas))])

    def to_json(self) -> dict:
        return {
            "order": self.order,
            "alphas": self.alphas.tolist(),
            "masses": self.masses.tolist(),
            "theta": self.theta,
            "c27": self.c27,
            "co1_error": self.co1_error,
            "co2": self.co2,
            "co3": self.co3,
        }


def allocate_on_curve(sigma_masses, curve: Polyline, enlarged, theta_bound: float) -> Allocation:
    """Densities ``g_i = alpha_i 1(A_i)`` on the curve with ``int g_i = sigma(Q_i)``.

    Squares are processed by nondecreasing side of ``Q~_i``; ``A_k`` drops the
    part of ``Q~_k`` where the earlier densities already exceed ``2 C theta``,
    with ``C`` the largest ratio of earlier intersecting mass to ``theta H^1(Q~_k)``.
    """
    if not isinstance(curve, Polyline):
        curve = Polyline(curve)
    masses = np.array([float(mv) for _, mv in sigma_masses])
    n = len(enlarged)
    if masses.size != n:
        raise ValueError("sigma_masses and enlarged differ in length")
    theta = float(theta_bound)
    if not theta > 0:
        raise ValueError("theta_bound must be > 0")
    order = sorted(range(n), key=lambda i: (enlarged[i].as_square().side, i))

    cuts = [curve.breakpoints]
    for sq in enlarged:
        iv = _clip_params(curve, sq)
        if iv:
            cuts.append(np.array(iv).ravel())
    edges = np.unique(np.concatenate(cuts))
    L = np.diff(edges)
    keep = L > 0
    mids = curve.point_at(0.5 * (edges[:-1] + edges[1:]))
    inside = np.zeros((L.size, n), dtype=bool)
    for i, sq in enumerate(enlarged):
        inside[:, i] = sq.as_square().contains_mask(mids[:, 0], mids[:, 1]) & keep
    H = np.array([math.fsum(L[inside[:, i]]) for i in range(n)])
    for i in range(n):
        if not H[i] > 0:
            raise CurveMissesSquareError(f"enlarged square {i} meets the curve in a null set")

    sq_list = [q.as_square() for q in enlarged]
    c27 = 0.0
    for pos, k in enumerate(order):
        earlier = [j for j in order[:pos] if sq_list[j].intersects(sq_list[k])]
        if earlier:
            c27 = max(c27, math.fsum(masses[earlier]) / (theta * H[k]))
    thr = 2 * c27 * theta

    running = np.zeros(L.size)
    support = np.zeros_like(inside)
    alphas = np.zeros(n)
    for k in order:
        A = inside[:, k] & (running <= thr)
        hA = math.fsum(L[A])
        support[:, k] = A
        alphas[k] = masses[k] / hA
        running[A] += alphas[k]

    integ = np.array([alphas[i] * math.fsum(L[support[:, i]]) for i in range(n)])
    with np.errstate(invalid="ignore", divide="ignore"):
        rel = np.where(masses > 0, np.abs(integ - masses) / np.where(masses > 0, masses, 1.0), np.abs(integ))
        co3 = np.where(masses > 0, alphas * np.array([q.side for q in sq_list]) / np.where(masses > 0, masses, 1.0), 0.0)
    co2 = float(running.max()) / theta if running.size else 0.0
    return Allocation(order, edges, inside, support, alphas, masses, theta, c27,
                      float(rel.max(initial=0.0)), co2, float(co3.max(initial=0.0)))
