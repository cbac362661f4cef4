"""Jones beta numbers, the dyadic beta-square sum and AD-regularity of polylines."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateCurveError
from .geometry import min_width_strip
from .squares import DyadicSquare


@dataclass(frozen=True, eq=False)
class Polyline:
    """Vertex chain with distinct consecutive vertices and positive length."""

    vertices: np.ndarray

    def __post_init__(self):
        v = np.array(self.vertices, dtype=float, copy=True).reshape(-1, 2)
        if v.shape[0] < 2:
            raise DegenerateCurveError("a polyline needs at least 2 vertices")
        if not np.all(np.isfinite(v)):
            raise DegenerateCurveError("polyline vertices must be finite")
        seg = np.hypot(*np.diff(v, axis=0).T)
        if np.any(seg == 0):
            raise DegenerateCurveError("consecutive vertices must be distinct")
        v.setflags(write=False)
        object.__setattr__(self, "vertices", v)

    @property
    def starts(self) -> np.ndarray:
        return self.vertices[:-1]

    @property
    def ends(self) -> np.ndarray:
        return self.vertices[1:]

    @property
    def segment_lengths(self) -> np.ndarray:
        return np.hypot(*np.diff(self.vertices, axis=0).T)

    @property
    def length(self) -> float:
        return math.fsum(self.segment_lengths)

    @property
    def breakpoints(self) -> np.ndarray:
        """Arc-length parameter of every vertex."""
        return np.concatenate([[0.0], np.cumsum(self.segment_lengths)])

    def point_at(self, s) -> np.ndarray:
        """Points at arc-length parameters ``s`` (clipped to the curve)."""
        s = np.clip(np.atleast_1d(np.asarray(s, dtype=float)), 0.0, self.breakpoints[-1])
        bp = self.breakpoints
        k = np.clip(np.searchsorted(bp, s, side="right") - 1, 0, len(bp) - 2)
        t = (s - bp[k]) / self.segment_lengths[k]
        return self.starts[k] + t[:, None] * (self.ends[k] - self.starts[k])

    def to_json(self) -> dict:
        return {"vertices": self.vertices.tolist()}


# ------------------------------------------------------------------ beta numbers

def _points(K) -> np.ndarray:
    return np.asarray(K, dtype=float).reshape(-1, 2)


def beta(K, q) -> float:
    """Width of the thinnest strip containing ``K cap 3q`` over ``l(q)``."""
    pts = _points(K)
    t3 = q.scaled(3.0)
    sub = pts[t3.contains_mask(pts[:, 0], pts[:, 1])]
    if len(sub) <= 2:
        return 0.0
    return min_width_strip(sub).width / q.side


@dataclass(frozen=True)
class BetaProfile:
    square: DyadicSquare
    entries: list              # (DyadicSquare, beta) in (level, i, j) order; nonempty 3P only
    criterion_sum: float
    resolution_level: int

    @property
    def ratio(self) -> float:
        """``criterion_sum / l(q)``."""
        return self.criterion_sum / self.square.side

    def levels(self) -> list[dict]:
        out = {}
        for p, b in self.entries:
            row = out.setdefault(p.level, {"level": p.level, "count": 0, "max_beta": 0.0, "terms": []})
            row["count"] += 1
            row["max_beta"] = max(row["max_beta"], b)
            row["terms"].append(b * b * p.side)
        return [
            {"level": r["level"], "count": r["count"], "max_beta": r["max_beta"], "sum": math.fsum(r["terms"])}
            for r in sorted(out.values(), key=lambda r: r["level"])
        ]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["level", "count", "max_beta", "sum_beta2_l"])
        for r in self.levels():
            w.writerow([r["level"], r["count"], repr(r["max_beta"]), repr(r["sum"])])
        return buf.getvalue()

    def to_json(self) -> dict:
        return {
            "square": self.square.to_json(),
            "criterion_sum": self.criterion_sum,
            "ratio": self.ratio,
            "resolution_level": self.resolution_level,
            "levels": self.levels(),
        }


def beta_criterion(K, q: DyadicSquare, max_depth: int) -> BetaProfile:
    """``sum beta_K(P)^2 l(P)`` over dyadic ``P`` in ``q`` with levels up to ``max_depth``.

    Only squares whose triple meets ``K`` are visited: at each level these are
    the neighbours of occupied cells.
    """
    if max_depth < q.level:
        raise ValueError("max_depth must be >= the level of q")
    pts = _points(K)
    entries = []
    terms = []
    for level in range(q.level, max_depth + 1):
        shift = level - q.level
        ci = np.floor(np.ldexp(pts[:, 0], level)).astype(np.int64)
        cj = np.floor(np.ldexp(pts[:, 1], level)).astype(np.int64)
        cells: dict = {}
        for t, key in enumerate(zip(ci.tolist(), cj.tolist())):
            cells.setdefault(key, []).append(t)
        lo_i, lo_j = q.i << shift, q.j << shift
        hi_i, hi_j = lo_i + (1 << shift), lo_j + (1 << shift)
        cand = set()
        for (i, j) in cells:
            for di in (-1, 0, 1):
                for dj in (-1, 0, 1):
                    a, b = i + di, j + dj
                    if lo_i <= a < hi_i and lo_j <= b < hi_j:
                        cand.add((a, b))
        for (a, b) in sorted(cand):
            idx = [t for di in (-1, 0, 1) for dj in (-1, 0, 1) for t in cells.get((a + di, b + dj), ())]
            p = DyadicSquare(level, a, b)
            if len(idx) <= 2:
                val = 0.0
            else:
                val = min_width_strip(pts[sorted(idx)]).width / p.side
            entries.append((p, val))
            terms.append(val * val * p.side)
    return BetaProfile(q, entries, math.fsum(terms), max_depth)


# ------------------------------------------------------------------ AD regularity

def length_in_ball(curve: Polyline, x, r: float) -> float:
    """Exact ``H^1(curve cap B(x, r))`` by clipping every segment against the circle."""
    return math.fsum(_clip_lengths(curve, float(x[0]), float(x[1]), float(r))[0])


def _clip_lengths(curve: Polyline, x: float, y: float, r) -> np.ndarray:
    """Length of every segment inside ``B(x, r)``; shape ``(len(r), segments)`` for array ``r``."""
    p0 = curve.starts
    d = curve.ends - p0
    a = np.einsum("ij,ij->i", d, d)
    rel = p0 - (x, y)
    t0 = -np.einsum("ij,ij->i", d, rel) / a
    # squared distance from the centre to each supporting line, from the cross product
    cross = d[:, 0] * rel[:, 1] - d[:, 1] * rel[:, 0]
    p2 = cross * cross / a
    r2 = np.square(np.atleast_1d(np.asarray(r, dtype=float)))[:, None]
    h = np.sqrt(np.maximum(r2 - p2, 0.0) / a)
    t1 = np.clip(t0 - h, 0.0, 1.0)
    t2 = np.clip(t0 + h, 0.0, 1.0)
    out = np.where(r2 > p2, (t2 - t1) * np.sqrt(a), 0.0)
    return out


def _critical_radii(curve: Polyline, x: float, y: float) -> np.ndarray:
    v = curve.vertices
    rv = np.hypot(v[:, 0] - x, v[:, 1] - y)
    p0 = curve.starts
    d = curve.ends - p0
    a = np.einsum("ij,ij->i", d, d)
    t = np.einsum("ij,ij->i", d, (x, y) - p0) / a
    inside = (t > 0) & (t < 1)
    foot = p0 + t[:, None] * d
    rt = np.hypot(foot[:, 0] - x, foot[:, 1] - y)[inside]
    r = np.unique(np.concatenate([rv, rt]))
    # radii at rounding-noise scale (a centre sitting on a segment) carry no information
    floor = 1e-9 * max(curve.length, float(np.max(np.abs(v))))
    return r[r > floor]


@dataclass(frozen=True)
class ADReport:
    constant: float
    center: tuple
    radius: float
    centers_scanned: int
    seed: int

    def to_json(self) -> dict:
        return {
            "constant": self.constant,
            "witness": {"center": list(self.center), "radius": self.radius},
            "centers_scanned": self.centers_scanned,
            "seed": self.seed,
        }


def _golden_max(f, a: float, b: float, iters: int = 80) -> tuple[float, float]:
    phi = (math.sqrt(5) - 1) / 2
    c, d = b - phi * (b - a), a + phi * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(iters):
        if fc > fd:
            b, d, fd = d, c, fc
            c = b - phi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + phi * (b - a)
            fd = f(d)
    return (fc, c) if fc > fd else (fd, d)


def _ratio_sup(curve: Polyline, x: float, y: float) -> tuple[float, float]:
    """Sup over ``r`` of ``H^1(B(x, r) cap curve) / r`` for one centre.

    The ratio is smooth between critical radii (vertex distances and segment
    tangencies); every gap is probed at its midpoint and the best gaps are
    refined by golden-section search.
    """
    crit = _critical_radii(curve, x, y)
    if crit.size == 0:
        return 0.0, 0.0

    def f(r):
        return float(np.sum(_clip_lengths(curve, x, y, r))) / r

    edges = np.concatenate([[0.0], crit])
    mids = 0.5 * (edges[:-1] + edges[1:])
    vals = np.sum(_clip_lengths(curve, x, y, crit), axis=1) / crit
    k = int(np.argmax(vals))
    best, best_r = float(vals[k]), float(crit[k])
    gap_vals = np.sum(_clip_lengths(curve, x, y, mids), axis=1) / mids
    for g in np.argsort(-gap_vals, kind="stable")[:2]:
        lo, hi = float(edges[g]), float(edges[g + 1])
        v, r = _golden_max(f, max(lo, hi * 1e-3), hi)
        if v > best:
            best, best_r = v, r
    return best, best_r


def ad_regularity(curve: Polyline, samples: int = 64, seed: int = 0) -> ADReport:
    """Sup of ``H^1(curve cap B(x, r)) / r`` over vertices and seeded arc-length samples."""
    if samples < 1:
        raise ValueError("samples must be >= 1")
    if not isinstance(curve, Polyline):
        curve = Polyline(curve)
    rng = np.random.Generator(np.random.Philox(seed))
    s = np.sort(rng.random(samples)) * curve.length
    centers = np.concatenate([curve.vertices, curve.point_at(s)])
    best, where, rad = -1.0, (0.0, 0.0), 0.0
    for cx, cy in centers:
        v, r = _ratio_sup(curve, float(cx), float(cy))
        if v > best:
            best, where, rad = v, (float(cx), float(cy)), r
    return ADReport(best, where, rad, len(centers), seed)
