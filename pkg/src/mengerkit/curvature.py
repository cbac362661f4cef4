"""Curvature of discrete measures, truncated Cauchy transforms and related audits."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .errors import DimensionMismatchError, EpsTooLargeError, IndexOutOfRangeError
from .measure import WeightedPlanarMeasure, min_pairwise_distance

# samples per vectorised Monte Carlo batch
_MC_CHUNK = 1 << 16


@dataclass(frozen=True)
class CurvatureResult:
    value: float
    truncation: dict = field(default_factory=lambda: {"kind": "none"})
    triple_count: int = 0
    method: str = "exact"
    samples: int | None = None
    seed: int | None = None
    stderr: float | None = None

    def to_json(self) -> dict:
        out = {
            "value": self.value,
            "truncation": self.truncation,
            "method": self.method,
            "triple_count": self.triple_count,
        }
        if self.method == "monte_carlo":
            out.update(samples=self.samples, seed=self.seed, stderr=self.stderr)
        return out


def _truncation(eps: float) -> dict:
    return {"kind": "none"} if eps == 0 else {"kind": "epsilon", "eps": float(eps)}


def _canonical(m: WeightedPlanarMeasure):
    """Atom arrays in lexicographic ``(x, y, w)`` order, so sums ignore input order."""
    order = np.lexsort((m.ws, m.ys, m.xs))
    return (
        np.ascontiguousarray(m.xs[order]),
        np.ascontiguousarray(m.ys[order]),
        np.ascontiguousarray(m.ws[order]),
    )


def _check_eps(eps: float) -> float:
    eps = float(eps)
    if not eps >= 0:
        raise ValueError(f"eps must be nonnegative, got {eps}")
    return eps


def c2_total(m: WeightedPlanarMeasure, eps: float = 0.0) -> CurvatureResult:
    """Exact ``c^2_eps(mu)`` over ordered triples (6x the sum over i<j<k)."""
    eps = _check_eps(eps)
    if m.n < 3:
        return CurvatureResult(0.0, _truncation(eps), 0)
    x, y, w = _canonical(m)
    partials, counts = _kernels.c2_upper_partials(x, y, w, eps)
    return CurvatureResult(6.0 * math.fsum(partials), _truncation(eps), 6 * int(counts.sum()))


def _check_index(m: WeightedPlanarMeasure, idx) -> np.ndarray:
    arr = np.asarray(sorted(set(int(i) for i in idx)), dtype=np.int64)
    if arr.size and (arr.min() < 0 or arr.max() >= m.n):
        raise IndexOutOfRangeError(f"atom index out of range [0, {m.n})")
    return arr


def c2_point(x_index: int, m: WeightedPlanarMeasure, eps: float = 0.0) -> float:
    """``c^2_mu(x_i)``: double sum over ordered pairs ``(j, k)``."""
    eps = _check_eps(eps)
    if not 0 <= int(x_index) < m.n:
        raise IndexOutOfRangeError(f"atom index {x_index} out of range [0, {m.n})")
    return float(_kernels.c2_point_kernel(m.xs, m.ys, m.ws, int(x_index), eps))


def c2_restricted(m: WeightedPlanarMeasure, A, B, C, eps: float = 0.0) -> float:
    """``c^2_mu(A, B, C)`` with ``x in A, y in B, z in C`` (not symmetrised)."""
    eps = _check_eps(eps)
    a, b, c = (_check_index(m, s) for s in (A, B, C))
    if not (a.size and b.size and c.size):
        return 0.0
    return float(_kernels.c2_restricted_kernel(m.xs, m.ys, m.ws, a, b, c, eps))


def curvature_kernel(m: WeightedPlanarMeasure) -> np.ndarray:
    """Dense matrix ``k_mu(x_i, x_j) = sum_k c(x_i, x_j, x_k)^2 w_k``."""
    if m.n == 0:
        return np.zeros((0, 0))
    return _kernels.kernel_matrix(
        np.ascontiguousarray(m.xs), np.ascontiguousarray(m.ys), np.ascontiguousarray(m.ws)
    )


def pair_distances(m: WeightedPlanarMeasure) -> np.ndarray:
    return np.hypot(m.xs[:, None] - m.xs[None, :], m.ys[:, None] - m.ys[None, :])


def k_operator(m: WeightedPlanarMeasure, j: int, f, kernel: np.ndarray | None = None) -> np.ndarray:
    """``(K_{mu,j} f)(x_i) = sum_{|x_i - x_l| > 2^-j} k_mu(x_i, x_l) f_l w_l``."""
    f = np.asarray(f, dtype=float).reshape(-1)
    if f.size != m.n:
        raise DimensionMismatchError(f"f has {f.size} entries, measure has {m.n} atoms")
    if m.n == 0:
        return np.zeros(0)
    K = curvature_kernel(m) if kernel is None else kernel
    far = pair_distances(m) > math.ldexp(1.0, -int(j))
    return (np.where(far, K, 0.0) * (f * m.ws)[None, :]).sum(axis=1)


def cauchy_transform(m: WeightedPlanarMeasure, z, eps: float = 0.0) -> complex:
    """``sum_{|xi - z| > eps} w / (xi - z)``."""
    eps = _check_eps(eps)
    zc = complex(z[0], z[1]) if not isinstance(z, complex) else z
    diff = m.z - zc
    sel = np.abs(diff) > eps
    terms = m.ws[sel] / diff[sel]
    return complex(math.fsum(terms.real), math.fsum(terms.imag))


@dataclass(frozen=True)
class MVIdentityReport:
    lhs: float
    curvature_term: float
    diagonal_term: float
    residual: float
    eps: float

    def to_json(self) -> dict:
        return {
            "lhs": self.lhs,
            "curvature_term": self.curvature_term,
            "diagonal_term": self.diagonal_term,
            "residual": self.residual,
            "eps": self.eps,
        }


def mv_identity_report(m: WeightedPlanarMeasure, eps: float = 0.0) -> MVIdentityReport:
    """Audit ``||C_eps mu||^2_{L^2(mu)} = c^2(mu)/6 + diagonal`` on an atomic measure.

    Atoms sharing a position are merged in the diagonal term; their cross
    terms are squares, not curvature terms.
    """
    eps = _check_eps(eps)
    h = min_pairwise_distance(m.xs, m.ys)
    if not eps < h:
        raise EpsTooLargeError(f"eps={eps} must be below the minimum atom distance {h}")
    if m.n == 0:
        return MVIdentityReport(0.0, 0.0, 0.0, 0.0, eps)
    z = m.z
    D = z[None, :] - z[:, None]  # z_j - z_i
    far = np.abs(D) > eps
    with np.errstate(divide="ignore", invalid="ignore"):
        T = np.where(far, m.ws[None, :] / np.where(far, D, 1.0), 0.0)
    inner = T.sum(axis=1)
    lhs = math.fsum(m.ws * (inner.real ** 2 + inner.imag ** 2))

    # merge coincident atoms for the diagonal
    pts, inv = np.unique(np.stack([m.xs, m.ys], axis=1), axis=0, return_inverse=True)
    inv = inv.reshape(-1)
    W = np.zeros(len(pts))
    np.add.at(W, inv, m.ws)
    P = pts[:, 0] + 1j * pts[:, 1]
    d2 = np.abs(P[None, :] - P[:, None]) ** 2
    with np.errstate(divide="ignore"):
        G = np.where(d2 > 0, W[None, :] ** 2 / np.where(d2 > 0, d2, 1.0), 0.0)
    per_pos = G.sum(axis=1)
    diagonal = math.fsum(m.ws * per_pos[inv])

    curv = c2_total(m, eps).value / 6.0
    return MVIdentityReport(lhs, curv, diagonal, lhs - curv - diagonal, eps)


def cauchy_matrix(m: WeightedPlanarMeasure, eps: float = 0.0) -> np.ndarray:
    """``M_ij = sqrt(w_i w_j) / (z_j - z_i)`` for ``|z_i - z_j| > eps``, else 0."""
    z = m.z
    D = z[None, :] - z[:, None]
    far = np.abs(D) > eps
    s = np.sqrt(m.ws)
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(far, (s[:, None] * s[None, :]) / np.where(far, D, 1.0), 0.0)


@dataclass(frozen=True)
class NormEstimate:
    value: float
    iterations: int
    gap: float
    converged: bool
    seed: int

    def to_json(self) -> dict:
        return {
            "value": self.value,
            "iterations": self.iterations,
            "gap": self.gap,
            "converged": self.converged,
            "seed": self.seed,
        }


def operator_norm_estimate(
    m: WeightedPlanarMeasure, eps: float = 0.0, iterations: int = 2000, seed: int = 0, tol: float = 1e-13
) -> NormEstimate:
    """Largest singular value of the truncated Cauchy matrix by power iteration on ``M^* M``."""
    if iterations < 1:
        raise ValueError("iterations must be >= 1")
    eps = _check_eps(eps)
    if m.n < 2:
        return NormEstimate(0.0, 0, 0.0, True, seed)
    M = cauchy_matrix(m, eps)
    rng = np.random.Generator(np.random.Philox(seed))
    v = rng.standard_normal(m.n) + 1j * rng.standard_normal(m.n)
    v /= np.linalg.norm(v)
    sigma, gap, it = 0.0, math.inf, 0
    for it in range(1, iterations + 1):
        u = M @ v
        s_new = float(np.linalg.norm(u))
        if s_new == 0.0:
            return NormEstimate(0.0, it, 0.0, True, seed)
        v = M.conj().T @ u
        v /= np.linalg.norm(v)
        gap = abs(s_new - sigma)
        sigma = s_new
        if gap <= tol * sigma:
            break
    sigma = float(np.linalg.norm(M @ v))
    return NormEstimate(sigma, it, gap, gap <= tol * sigma, seed)


def operator_norm_dense(m: WeightedPlanarMeasure, eps: float = 0.0) -> float:
    if m.n < 2:
        return 0.0
    return float(np.linalg.norm(cauchy_matrix(m, eps), 2))


def c2_monte_carlo(m: WeightedPlanarMeasure, eps: float = 0.0, samples: int = 10**6, seed: int = 0) -> CurvatureResult:
    """Unbiased estimate of ``c^2_eps(mu)`` from uniformly sampled ordered triples."""
    if samples < 1:
        raise ValueError("samples must be >= 1")
    eps = _check_eps(eps)
    n = m.n
    trunc = _truncation(eps)
    if n < 3:
        return CurvatureResult(0.0, trunc, 0, "monte_carlo", samples, seed, 0.0)
    rng = np.random.Generator(np.random.Philox(seed))
    x, y, w = m.xs, m.ys, m.ws
    scale = float(n) ** 3
    sums, sqs = [], []
    done = 0
    while done < samples:
        k = min(_MC_CHUNK, samples - done)
        idx = rng.integers(0, n, size=(3, k))
        a, b, c = idx
        ux, uy = x[b] - x[a], y[b] - y[a]
        vx, vy = x[c] - x[a], y[c] - y[a]
        wx, wy = x[c] - x[b], y[c] - y[b]
        dab, dac, dbc = ux * ux + uy * uy, vx * vx + vy * vy, wx * wx + wy * wy
        ok = (np.sqrt(dab) > eps) & (np.sqrt(dac) > eps) & (np.sqrt(dbc) > eps) & (dab * dac >= 1e-300)
        cr = ux * vy - uy * vx
        with np.errstate(divide="ignore", invalid="ignore"):
            c2 = np.where(ok, 4.0 * cr * cr / np.where(ok, dab * dac * dbc, 1.0), 0.0)
        vals = c2 * w[a] * w[b] * w[c] * scale
        sums.append(math.fsum(vals))
        sqs.append(math.fsum(vals * vals))
        done += k
    mean = math.fsum(sums) / samples
    if samples > 1:
        var = max(math.fsum(sqs) / samples - mean * mean, 0.0) * samples / (samples - 1)
        stderr = math.sqrt(var / samples)
    else:
        stderr = math.inf
    return CurvatureResult(mean, trunc, samples, "monte_carlo", samples, seed, stderr)


def c2_auto(m: WeightedPlanarMeasure, eps: float = 0.0, cutoff: int = 400, samples: int = 10**6, seed: int = 0) -> CurvatureResult:
    """Exact sum up to ``cutoff`` atoms, Monte Carlo above."""
    if m.n <= cutoff:
        return c2_total(m, eps)
    return c2_monte_carlo(m, eps, samples, seed)
