"""Square classification (high density / high curvature / low density) and Bad(R)."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .. import _kernels
from ..curvature import curvature_kernel
from ..dyadic import besicovitch_select
from ..errors import PreconditionViolated
from ..measure import WeightedPlanarMeasure, min_pairwise_distance, nearest_distinct_distances
from ..squares import DyadicSquare, Square


@dataclass(frozen=True)
class CoronaParams:
    A: float = 100.0
    delta: float = 0.01
    eps0: float = 1e-4
    doubling_a: float = 16.0
    doubling_b: float = 5000.0
    center_a: float = 70.0
    center_b: float = 5000.0
    b_balance: float | None = None
    # classified squares have side 2^-n l(R) with n >= min_n
    min_n: int = 5
    # curvature band (2^-(J(Q)+hc_fine), 2^-(J(R)-hc_coarse)]
    hc_fine: int = 10
    hc_coarse: int = 4
    # low-density squares S_Q satisfy Q in (1/ld_ratio) S_Q
    ld_ratio: float = 100.0

    def __post_init__(self):
        if not self.A > 1:
            raise ValueError("A must be > 1")
        if not 0 < self.delta < 1:
            raise ValueError("delta must lie in (0, 1)")
        if not self.eps0 > 0:
            raise ValueError("eps0 must be > 0")
        if self.b_balance is None:
            object.__setattr__(self, "b_balance", 1e-6 * self.delta / self.A)

    def to_json(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class Classification:
    kind: str  # "HD" | "HC" | "LD" | "NONE"
    density_ratio: float = 0.0
    hc_fraction: float = 0.0
    sparse_square: Square | None = None

    def to_json(self) -> dict:
        out = {"kind": self.kind, "density_ratio": self.density_ratio, "hc_fraction": self.hc_fraction}
        if self.sparse_square is not None:
            out["sparse_square"] = self.sparse_square.to_json()
        return out


def _m0(d: np.ndarray) -> np.ndarray:
    """Smallest integer ``j`` with ``d > 2^-j`` (exact, via the binary exponent)."""
    f, e = np.frexp(d)
    fl = np.where(f == 0.5, 1 - e, -e)
    return fl + 1


class CoronaContext:
    """Per-measure caches: x-sorted atoms for box queries and truncated curvature sums."""

    def __init__(self, m: WeightedPlanarMeasure, resolution: float | None = None, kernel: np.ndarray | None = None):
        self.m = m
        self.order = np.argsort(m.xs, kind="stable")
        self.xs_s = np.ascontiguousarray(m.xs[self.order])
        self.ys_s = np.ascontiguousarray(m.ys[self.order])
        self.ws_s = np.ascontiguousarray(m.ws[self.order])
        h = min_pairwise_distance(m.xs, m.ys) if resolution is None else float(resolution)
        self.resolution = h
        # squares centred at an atom are scanned down to its nearest distinct neighbour
        self.local_floor = np.maximum(nearest_distinct_distances(m.xs, m.ys), h)
        self._kernel = kernel
        self._kcum = None
        self._mlo = 0

    @property
    def kernel(self) -> np.ndarray:
        if self._kernel is None:
            self._kernel = curvature_kernel(self.m)
        return self._kernel

    def c2(self) -> float:
        """``c^2(mu) = sum_ij w_i k(x_i, x_j) w_j``."""
        w = self.m.ws
        return math.fsum(w * (self.kernel @ w)) if self.m.n else 0.0

    def _bands(self):
        if self._kcum is None:
            m = self.m
            n = m.n
            d = np.hypot(m.xs[:, None] - m.xs[None, :], m.ys[:, None] - m.ys[None, :])
            pos = d > 0
            m0 = np.where(pos, _m0(np.where(pos, d, 1.0)), 0)
            lo = int(m0[pos].min()) if pos.any() else 0
            hi = int(m0[pos].max()) if pos.any() else 0
            M = hi - lo + 1
            b = np.where(pos, m0 - lo, 0)
            flat = (np.arange(n)[:, None] * M + b).ravel()
            vals = (self.kernel * m.ws[None, :]).ravel()
            bins = np.bincount(flat, weights=vals, minlength=n * M).reshape(n, M)
            self._kcum = np.cumsum(bins, axis=1)
            self._mlo = lo
        return self._kcum, self._mlo

    def k_trunc(self, j: int) -> np.ndarray:
        """``K_{mu,j} chi_E`` at every atom."""
        kcum, lo = self._bands()
        t = j - lo
        if t < 0:
            return np.zeros(self.m.n)
        return kcum[:, min(t, kcum.shape[1] - 1)]

    def box_mass(self, x0, y0, side, weights: np.ndarray | None = None) -> np.ndarray:
        x0 = np.atleast_1d(np.asarray(x0, dtype=float))
        y0 = np.atleast_1d(np.asarray(y0, dtype=float))
        side = np.broadcast_to(np.asarray(side, dtype=float), x0.shape).copy()
        ws = self.ws_s if weights is None else np.ascontiguousarray(np.asarray(weights, dtype=float)[self.order])
        return _kernels.box_masses(self.xs_s, self.ys_s, ws, x0, y0, side)

    def mass(self, q) -> float:
        s = q.as_square()
        return float(self.box_mass([s.x0], [s.y0], [s.side])[0])


def _theta(ctx: CoronaContext, q) -> float:
    return ctx.mass(q) / q.side


def _hc_flags(ctx: CoronaContext, R: DyadicSquare, n: int, params: CoronaParams, thr: float) -> np.ndarray:
    jq = R.J + n
    band = ctx.k_trunc(jq + params.hc_fine) - ctx.k_trunc(R.J - params.hc_coarse)
    return band >= thr


def _classify_many(ctx, R: DyadicSquare, n: int, cx, cy, params: CoronaParams, theta_r: float):
    """Vectorised classification of squares of side ``2^-n l(R)`` centred at ``(cx, cy)``.

    Returns ``(kinds, doubling, ratio, hc_frac, ld_side)`` arrays.
    """
    s = math.ldexp(R.side, -n)
    x0, y0 = cx - 0.5 * s, cy - 0.5 * s
    mq = ctx.box_mass(x0, y0, s)
    big = params.center_a * s
    m70 = ctx.box_mass(cx - 0.5 * big, cy - 0.5 * big, big)
    doubling = m70 <= params.center_b * mq
    ratio = (mq / s) / theta_r if theta_r > 0 else np.full(mq.shape, np.inf)
    hd = ratio >= params.A
    flags = _hc_flags(ctx, R, n, params, params.eps0 * theta_r ** 2)
    heavy = ctx.box_mass(x0, y0, s, weights=ctx.m.ws * flags)
    with np.errstate(invalid="ignore", divide="ignore"):
        frac = np.where(mq > 0, heavy / np.where(mq > 0, mq, 1.0), 0.0)
    hc = ~hd & (heavy >= 0.5 * mq) & (mq > 0)
    ld_side = np.full(mq.shape, np.nan)
    k = math.ceil(math.log2(params.ld_ratio))
    while math.ldexp(s, k) <= R.side / 8:
        S = math.ldexp(s, k)
        ms = ctx.box_mass(cx - 0.5 * S, cy - 0.5 * S, S)
        hit = np.isnan(ld_side) & (ms / S <= params.delta * theta_r)
        ld_side[hit] = S
        k += 1
    ld = ~hd & ~hc & ~np.isnan(ld_side)
    kinds = np.full(mq.shape, "NONE", dtype=object)
    kinds[hd] = "HD"
    kinds[hc] = "HC"
    kinds[ld] = "LD"
    return kinds, doubling, ratio, frac, ld_side


def classify_square(
    m: WeightedPlanarMeasure,
    q: Square,
    R: DyadicSquare,
    params: CoronaParams | None = None,
    ctx: CoronaContext | None = None,
) -> Classification:
    """Classify ``q`` relative to the top square ``R`` (HD, then HC, then LD)."""
    params = params or CoronaParams()
    ctx = ctx or CoronaContext(m)
    q = q.as_square()
    ratio = q.side / R.side
    n = -math.frexp(ratio)[1] + 1
    if not (ratio > 0 and math.ldexp(1.0, -n) == ratio):
        raise PreconditionViolated("side", f"l(q)/l(R) = {ratio!r} is not a power of two")
    if n < params.min_n:
        raise PreconditionViolated("side", f"l(q) = 2^-{n} l(R) with n < {params.min_n}")
    cx, cy = q.center
    three_r = R.scaled(3.0)
    if not (np.any((m.xs == cx) & (m.ys == cy)) and three_r.contains_point(cx, cy)):
        raise PreconditionViolated("center", "q is not centred at an atom in 3R")
    if ctx.mass(q.scaled(params.center_a)) > params.center_b * ctx.mass(q):
        raise PreconditionViolated("doubling", f"q is not ({params.center_a:g},{params.center_b:g})-doubling")
    theta_r = _theta(ctx, R)
    kinds, _, ratio_a, frac, ld_side = _classify_many(ctx, R, n, np.array([cx]), np.array([cy]), params, theta_r)
    sparse = Square.centered(cx, cy, float(ld_side[0])) if kinds[0] == "LD" else None
    return Classification(str(kinds[0]), float(ratio_a[0]), float(frac[0]), sparse)


def wrap_four_dyadic(q: Square) -> DyadicSquare:
    """Lexicographically first 4-dyadic square ``Q^`` of side ``4 l(q)`` with ``q`` in ``Q^/2``."""
    level = -math.frexp(q.side)[1] + 1
    if math.ldexp(1.0, -level) != q.side:
        raise ValueError("wrap_four_dyadic needs a power-of-two side")
    i = math.ceil(math.ldexp(q.x0, level)) - 2
    j = math.ceil(math.ldexp(q.y0, level)) - 2
    return DyadicSquare(level, i, j, True)


@dataclass(frozen=True)
class BadSquare:
    square: DyadicSquare
    classification: Classification
    generator: Square  # the classified square Q_x
    center_atom: int   # the atom x with Q^_x = square

    @property
    def kind(self) -> str:
        return self.classification.kind


def build_bad(
    m: WeightedPlanarMeasure,
    R: DyadicSquare,
    params: CoronaParams | None = None,
    ctx: CoronaContext | None = None,
) -> list[BadSquare]:
    """Bad(R): greedy cover of the largest classified squares through the atoms of 3R."""
    params = params or CoronaParams()
    ctx = ctx or CoronaContext(m)
    three_r = R.scaled(3.0)
    idx3 = np.flatnonzero(three_r.contains_mask(m.xs, m.ys))
    if idx3.size <= 2:
        return []
    theta_r = _theta(ctx, R)
    # one centre per distinct position, smallest atom index first
    _, first = np.unique(np.stack([m.xs[idx3], m.ys[idx3]], axis=1), axis=0, return_index=True)
    centers = idx3[np.sort(first)]
    cx, cy = m.xs[centers], m.ys[centers]
    floor = ctx.local_floor[centers]
    px, py = m.xs[idx3], m.ys[idx3]

    assigned = np.full(idx3.size, -1)  # index into `found`
    found: list[tuple[Square, Classification]] = []
    n = params.min_n
    while True:
        s = math.ldexp(R.side, -n)
        active = s >= floor
        if not active.any():
            break
        kinds, doubling, ratio, frac, ld_side = _classify_many(ctx, R, n, cx, cy, params, theta_r)
        ok = np.flatnonzero(active & doubling & (kinds != "NONE"))
        for c in ok:
            q = Square.centered(float(cx[c]), float(cy[c]), s)
            free = assigned < 0
            inside = free & q.contains_mask(px, py)
            if not inside.any():
                continue
            sparse = Square.centered(float(cx[c]), float(cy[c]), float(ld_side[c])) if kinds[c] == "LD" else None
            found.append((q, Classification(str(kinds[c]), float(ratio[c]), float(frac[c]), sparse)))
            assigned[inside] = len(found) - 1
        if (assigned >= 0).all():
            break
        n += 1

    cands, meta = [], []
    for t in np.flatnonzero(assigned >= 0):
        q, cl = found[assigned[t]]
        hat = wrap_four_dyadic(q)
        cands.append((hat, (float(px[t]), float(py[t]))))
        meta.append((q, cl, int(idx3[t])))
    if not cands:
        return []
    sel = besicovitch_select(cands)
    return [BadSquare(cands[t][0], meta[t][1], meta[t][0], meta[t][2]) for t in sel.indices]
