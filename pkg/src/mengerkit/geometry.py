"""Pointwise planar geometry: Menger curvature, strips of minimal width."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import InapplicableError

# products of denominator distances below this count as coincident points
TINY = 1e-300
# forward error bound of the 2x2 orientation determinant (Shewchuk's ccwerrboundA)
_CCW_ERR = (3.0 + 16.0 * 2.0 ** -53) * 2.0 ** -53
# Veltkamp splitter for double precision
_SPLIT = 134217729.0


def _diff_err(a: float, b: float, s: float) -> float:
    """Rounding error of ``s = fl(a - b)`` (TwoSum)."""
    bv = s - a
    return (a - (s - bv)) - (b + bv)


def _prod_err(a: float, b: float, p: float) -> float:
    """Rounding error of ``p = fl(a * b)`` (TwoProduct); nan on overflow."""
    c = _SPLIT * a
    ah = c - (c - a)
    c = _SPLIT * b
    bh = c - (c - b)
    al, bl = a - ah, b - bh
    return al * bl - (((p - ah * bh) - al * bh) - ah * bl)


def orient(ax, ay, bx, by, cx, cy) -> float:
    """Twice the signed area of ``abc``; exact sign, exactly 0 for collinear input."""
    acx, acy = ax - cx, ay - cy
    bcx, bcy = bx - cx, by - cy
    left, right = acx * bcy, acy * bcx
    det = left - right
    bound = _CCW_ERR * (abs(left) + abs(right))
    if abs(det) > bound:
        return det
    # every intermediate exact: the float determinant has the exact sign
    if (
        _diff_err(ax, cx, acx) == 0.0
        and _diff_err(ay, cy, acy) == 0.0
        and _diff_err(bx, cx, bcx) == 0.0
        and _diff_err(by, cy, bcy) == 0.0
        and _prod_err(acx, bcy, left) == 0.0
        and _prod_err(acy, bcx, right) == 0.0
    ):
        return det
    fa = (Fraction(ax) - Fraction(cx)) * (Fraction(by) - Fraction(cy))
    fb = (Fraction(ay) - Fraction(cy)) * (Fraction(bx) - Fraction(cx))
    exact = fa - fb
    return 0.0 if exact == 0 else float(exact)


def menger_curvature(p, q, r) -> float:
    """Inverse circumradius of ``pqr``; 0 for collinear or coincident points."""
    a, b, c = sorted(((float(p[0]), float(p[1])), (float(q[0]), float(q[1])), (float(r[0]), float(r[1]))))
    dab = math.hypot(b[0] - a[0], b[1] - a[1])
    dac = math.hypot(c[0] - a[0], c[1] - a[1])
    if dab * dac < TINY:
        return 0.0
    dbc = math.hypot(c[0] - b[0], c[1] - b[1])
    if dbc == 0.0:
        return 0.0
    det = orient(a[0], a[1], b[0], b[1], c[0], c[1])
    if det == 0.0:
        return 0.0
    # 2 dist(a, L_bc) / (|a-b| |a-c|) with dist = |det| / |b-c|
    return 2.0 * abs(det) / dbc / (dab * dac)


def menger_curvature_arrays(x1, y1, x2, y2, x3, y3) -> np.ndarray:
    """Vectorised curvature without the exact collinearity fallback."""
    x1, y1, x2, y2, x3, y3 = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (x1, y1, x2, y2, x3, y3)))
    det = (x2 - x1) * (y3 - y1) - (y2 - y1) * (x3 - x1)
    d12 = np.hypot(x2 - x1, y2 - y1)
    d13 = np.hypot(x3 - x1, y3 - y1)
    d23 = np.hypot(x3 - x2, y3 - y2)
    den = d12 * d13 * d23
    ok = (d12 * d13 >= TINY) & (d23 > 0)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.where(ok, 2.0 * np.abs(det) / np.where(ok, den, 1.0), 0.0)
    return out


def circumradius(p, q, r) -> float:
    c = menger_curvature(p, q, r)
    return math.inf if c == 0.0 else 1.0 / c


def point_line_distance(p, a, b) -> float:
    """Distance from ``p`` to the line through ``a`` and ``b`` (to ``a`` if ``a == b``)."""
    dx, dy = b[0] - a[0], b[1] - a[1]
    norm = math.hypot(dx, dy)
    if norm == 0.0:
        return math.hypot(p[0] - a[0], p[1] - a[1])
    return abs(orient(a[0], a[1], b[0], b[1], p[0], p[1])) / norm


# ------------------------------------------------------------------ strips

@dataclass(frozen=True)
class Strip:
    """``{p : lo <= <p, n> <= hi}`` where ``n`` is the left normal of ``direction``."""

    direction: tuple[float, float]
    lo: float
    hi: float

    @property
    def width(self) -> float:
        return self.hi - self.lo

    @property
    def normal(self) -> tuple[float, float]:
        return (-self.direction[1], self.direction[0])

    def to_json(self) -> dict:
        return {"direction": list(self.direction), "lo": self.lo, "hi": self.hi, "width": self.width}


def convex_hull(points: np.ndarray) -> np.ndarray:
    """Monotone-chain hull, counter-clockwise, without collinear vertices."""
    pts = np.unique(np.asarray(points, dtype=float).reshape(-1, 2), axis=0)
    if len(pts) <= 2:
        return pts
    P = [tuple(p) for p in pts]

    def chain(seq):
        out = []
        for p in seq:
            while len(out) >= 2 and orient(*out[-2], *out[-1], *p) <= 0:
                out.pop()
            out.append(p)
        return out

    lower = chain(P)
    upper = chain(reversed(P))
    hull = lower[:-1] + upper[:-1]
    return np.array(hull, dtype=float)


def _strip_for_edge(hull: np.ndarray, i: int) -> Strip:
    a, b = hull[i], hull[(i + 1) % len(hull)]
    d = b - a
    u = d / math.hypot(d[0], d[1])
    nrm = np.array([-u[1], u[0]])
    proj = hull @ nrm
    return Strip((float(u[0]), float(u[1])), float(proj.min()), float(proj.max()))


def min_width_strip(points) -> Strip:
    """Thinnest strip containing ``points`` via hull and rotating calipers."""
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    if len(pts) == 0:
        raise ValueError("min_width_strip needs at least one point")
    hull = convex_hull(pts)
    if len(hull) == 1:
        p = hull[0]
        return Strip((1.0, 0.0), float(p[1]), float(p[1]))
    if len(hull) == 2:
        d = hull[1] - hull[0]
        u = d / math.hypot(d[0], d[1])
        off = float(-u[1] * hull[0][0] + u[0] * hull[0][1])
        return Strip((float(u[0]), float(u[1])), off, off)
    h = len(hull)
    best_i, best_w = 0, math.inf
    j = 1
    for i in range(h):
        a, b = hull[i], hull[(i + 1) % h]
        ex, ey = b[0] - a[0], b[1] - a[1]
        elen = math.hypot(ex, ey)

        def height(k):
            p = hull[k % h]
            return (ex * (p[1] - a[1]) - ey * (p[0] - a[0])) / elen

        # advance the antipodal pointer while the height grows
        j = max(j, i + 1)
        while j + 1 < i + h and height(j + 1) >= height(j):
            j += 1
        w = height(j)
        if w < best_w:
            best_w, best_i = w, i
    return _strip_for_edge(hull, best_i)


def min_width_bruteforce(points) -> float:
    """Reference minimum over all hull-edge directions, O(h^2)."""
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    hull = convex_hull(pts)
    if len(hull) <= 2:
        return 0.0
    return min(_strip_for_edge(hull, i).width for i in range(len(hull)))


# ---------------------------------------------------------- perturbation bound

def perturbation_bound(x, x_prime, y, z, c6: float) -> float:
    dxy = math.dist(x, y)
    dxz = math.dist(x, z)
    if dxy * dxz == 0.0:
        return math.inf
    return (4.0 + 2.0 * c6) * math.dist(x, x_prime) / (dxy * dxz)


def curvature_perturbation_check(x, x_prime, y, z, c6: float) -> bool:
    """Whether moving ``x`` to ``x'`` changes ``c(., y, z)`` within the perturbation bound."""
    if not c6 >= 1.0:
        raise InapplicableError(f"c6 must be >= 1, got {c6}")
    dxy, dpy = math.dist(x, y), math.dist(x_prime, y)
    slack = 1e-12
    if not (dxy / c6 * (1 - slack) <= dpy <= c6 * dxy * (1 + slack)):
        raise InapplicableError(
            f"comparability fails: |x'-y| = {dpy!r} not within [{dxy / c6!r}, {c6 * dxy!r}]"
        )
    rhs = perturbation_bound(x, x_prime, y, z, c6)
    if math.isinf(rhs):
        return True
    c, cp = menger_curvature(x, y, z), menger_curvature(x_prime, y, z)
    return abs(c - cp) <= rhs + 1e-12 * max(c, cp)
