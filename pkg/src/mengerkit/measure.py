"""Finite atomic planar measures and scalar measure-geometry quantities."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, NamedTuple

import numpy as np

from .errors import EmptyMeasureError, MeasureFormatError, NotNestedError, ZeroSideLengthError
from .squares import Square

# rows of the pairwise-distance matrix processed at once in growth scans
_ROW_CHUNK = 256


class Point(NamedTuple):
    x: float
    y: float


def _frozen(a, dtype=np.float64) -> np.ndarray:
    arr = np.array(a, dtype=dtype, copy=True).reshape(-1)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class WeightedPlanarMeasure:
    """Ordered list of atoms ``(x_i, y_i)`` with positive weights ``w_i``."""

    xs: np.ndarray
    ys: np.ndarray
    ws: np.ndarray
    name: str = ""

    def __post_init__(self):
        xs, ys, ws = _frozen(self.xs), _frozen(self.ys), _frozen(self.ws)
        if not (xs.size == ys.size == ws.size):
            raise ValueError("xs, ys, ws must have equal length")
        if not (np.all(np.isfinite(xs)) and np.all(np.isfinite(ys))):
            raise ValueError("atom coordinates must be finite")
        if not np.all(np.isfinite(ws)) or np.any(ws <= 0):
            raise ValueError("atom weights must be finite and > 0")
        object.__setattr__(self, "xs", xs)
        object.__setattr__(self, "ys", ys)
        object.__setattr__(self, "ws", ws)

    @classmethod
    def from_atoms(cls, atoms: Iterable[tuple[tuple[float, float], float]], name: str = "") -> WeightedPlanarMeasure:
        atoms = list(atoms)
        xs = [float(p[0]) for p, _ in atoms]
        ys = [float(p[1]) for p, _ in atoms]
        ws = [float(w) for _, w in atoms]
        return cls(np.array(xs), np.array(ys), np.array(ws), name)

    @classmethod
    def empty(cls, name: str = "") -> WeightedPlanarMeasure:
        return cls(np.empty(0), np.empty(0), np.empty(0), name)

    def __len__(self) -> int:
        return int(self.ws.size)

    @property
    def n(self) -> int:
        return int(self.ws.size)

    @property
    def z(self) -> np.ndarray:
        return self.xs + 1j * self.ys

    def point(self, i: int) -> Point:
        return Point(float(self.xs[i]), float(self.ys[i]))

    def atoms(self):
        for x, y, w in zip(self.xs, self.ys, self.ws):
            yield Point(float(x), float(y)), float(w)

    def with_weights(self, ws) -> WeightedPlanarMeasure:
        return WeightedPlanarMeasure(self.xs, self.ys, ws, self.name)

    def with_points(self, xs, ys) -> WeightedPlanarMeasure:
        return WeightedPlanarMeasure(xs, ys, self.ws, self.name)

    def subset(self, idx) -> WeightedPlanarMeasure:
        idx = np.asarray(idx)
        return WeightedPlanarMeasure(self.xs[idx], self.ys[idx], self.ws[idx], self.name)

    def same_as(self, other: WeightedPlanarMeasure) -> bool:
        """Bitwise equality of atom arrays."""
        return (
            self.xs.tobytes() == other.xs.tobytes()
            and self.ys.tobytes() == other.ys.tobytes()
            and self.ws.tobytes() == other.ws.tobytes()
        )


def total_mass(m: WeightedPlanarMeasure) -> float:
    return math.fsum(m.ws)


def ball_mass(m: WeightedPlanarMeasure, center, r: float) -> float:
    """Weight of atoms in the closed ball ``B(center, r)``."""
    if r < 0:
        raise ValueError("radius must be nonnegative")
    cx, cy = center
    d = np.hypot(m.xs - cx, m.ys - cy)
    return math.fsum(m.ws[d <= r])


def mass_in(m: WeightedPlanarMeasure, q) -> float:
    """Weight of atoms in a half-open square."""
    return math.fsum(m.ws[q.contains_mask(m.xs, m.ys)])


def min_pairwise_distance(xs: np.ndarray, ys: np.ndarray) -> float:
    """Smallest positive distance between atoms; ``inf`` if there is none."""
    n = xs.size
    best = math.inf
    for s in range(0, n, _ROW_CHUNK):
        d = np.hypot(xs[s:s + _ROW_CHUNK, None] - xs[None, :], ys[s:s + _ROW_CHUNK, None] - ys[None, :])
        pos = d[d > 0]
        if pos.size:
            best = min(best, float(pos.min()))
    return best


def nearest_distinct_distances(xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
    """Per atom, the distance to the nearest atom at a different position (``inf`` if none)."""
    n = xs.size
    out = np.full(n, math.inf)
    for s in range(0, n, _ROW_CHUNK):
        d = np.hypot(xs[s:s + _ROW_CHUNK, None] - xs[None, :], ys[s:s + _ROW_CHUNK, None] - ys[None, :])
        d[d == 0] = math.inf
        if n:
            out[s:s + _ROW_CHUNK] = d.min(axis=1)
    return out


@dataclass(frozen=True)
class GrowthReport:
    constant: float
    witness_center: Point
    witness_radius: float
    resolution: float
    atom_scale_divergent: bool = True
    # the scan only uses atom centres; arbitrary centres can add at most this factor
    center_bound_factor: float = 2.0

    def to_json(self) -> dict:
        return {
            "constant": self.constant,
            "witness": {"center": list(self.witness_center), "radius": self.witness_radius},
            "resolution": self.resolution,
            "atom_scale_divergent": self.atom_scale_divergent,
            "center_bound_factor": self.center_bound_factor,
        }


def growth_scan(xs, ys, ws, h: float, centers: np.ndarray | None = None) -> tuple[float, int, float]:
    """Max of ``mu(B(x, r)) / r`` over atom centres and radii in ``{h} U {d >= h}``.

    Returns ``(ratio, center_index, radius)``.
    """
    n = xs.size
    idx_all = np.arange(n) if centers is None else np.asarray(centers)
    best, best_i, best_r = -1.0, -1, h
    for s in range(0, idx_all.size, _ROW_CHUNK):
        rows = idx_all[s:s + _ROW_CHUNK]
        d = np.hypot(xs[rows, None] - xs[None, :], ys[rows, None] - ys[None, :])
        order = np.argsort(d, axis=1, kind="stable")
        ds = np.take_along_axis(d, order, axis=1)
        cw = np.cumsum(ws[order], axis=1)
        # mass of the closed ball of radius h: last index with d <= h
        k_h = np.sum(ds <= h, axis=1) - 1
        m_h = np.where(k_h >= 0, cw[np.arange(rows.size), np.maximum(k_h, 0)], 0.0)
        ratio_h = m_h / h
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = np.where(ds >= h, cw / np.where(ds > 0, ds, 1.0), -1.0)
        jmax = np.argmax(ratio, axis=1)
        rmax = ratio[np.arange(rows.size), jmax]
        for t in range(rows.size):
            cand = [(float(rmax[t]), float(ds[t, jmax[t]])), (float(ratio_h[t]), h)]
            for val, rad in cand:
                if val > best:
                    best, best_i, best_r = val, int(rows[t]), rad
    return best, best_i, best_r


def growth_constant(m: WeightedPlanarMeasure) -> GrowthReport:
    """Linear-growth constant scanned over atom centres and radii above atom resolution."""
    if m.n == 0:
        raise EmptyMeasureError("growth_constant of an empty measure")
    h = min_pairwise_distance(m.xs, m.ys)
    if not math.isfinite(h):
        return GrowthReport(math.inf, m.point(0), 0.0, 0.0)
    val, i, r = growth_scan(m.xs, m.ys, m.ws, h)
    return GrowthReport(val, m.point(i), r, h)


def _side(q) -> float:
    side = q.side
    if not side > 0:
        raise ZeroSideLengthError(f"square side must be positive, got {side}")
    return side


def theta(m: WeightedPlanarMeasure, q) -> float:
    """Average linear density ``mu(Q) / l(Q)``."""
    side = _side(q)
    return mass_in(m, q) / side


def enclosing_concentric(q, r) -> Square:
    """Smallest square concentric with ``q`` containing ``r``."""
    cx, cy = q.center
    half = max(abs(cx - r.x0), abs(r.x1 - cx), abs(cy - r.y0), abs(r.y1 - cy))
    return Square(cx - half, cy - half, 2.0 * half)


def delta(m: WeightedPlanarMeasure, q, r) -> float:
    """``sum_{y in R_Q \\ Q} w_y / |y - x_Q|``."""
    _side(q)
    if not r.contains_square(q):
        raise NotNestedError("q is not contained in r")
    rq = enclosing_concentric(q, r)
    cx, cy = q.center
    sel = rq.contains_mask(m.xs, m.ys) & ~q.contains_mask(m.xs, m.ys)
    d = np.hypot(m.xs[sel] - cx, m.ys[sel] - cy)
    return math.fsum(m.ws[sel] / d)


# ---------------------------------------------------------------- file format

def dumps_csv(m: WeightedPlanarMeasure) -> str:
    buf = io.StringIO()
    buf.write("x,y,w\n")
    for x, y, w in zip(m.xs, m.ys, m.ws):
        buf.write(f"{float(x)!r},{float(y)!r},{float(w)!r}\n")
    return buf.getvalue()


def loads_csv(text: str, name: str = "") -> WeightedPlanarMeasure:
    reader = csv.reader(io.StringIO(text))
    xs, ys, ws = [], [], []
    header_seen = False
    for lineno, row in enumerate(reader, start=1):
        if not row or all(not c.strip() for c in row):
            continue
        cells = [c.strip() for c in row]
        if not header_seen:
            if cells != ["x", "y", "w"]:
                raise MeasureFormatError(f"line {lineno}: expected header 'x,y,w', got {','.join(cells)!r}")
            header_seen = True
            continue
        if len(cells) != 3:
            raise MeasureFormatError(f"line {lineno}: expected 3 fields, got {len(cells)}")
        try:
            x, y, w = (float(c) for c in cells)
        except ValueError as exc:
            raise MeasureFormatError(f"line {lineno}: {exc}") from None
        if not (math.isfinite(x) and math.isfinite(y)):
            raise MeasureFormatError(f"line {lineno}: non-finite coordinate")
        if not (math.isfinite(w) and w > 0):
            raise MeasureFormatError(f"line {lineno}: weight must be finite and > 0, got {w!r}")
        xs.append(x)
        ys.append(y)
        ws.append(w)
    if not header_seen:
        raise MeasureFormatError("line 1: missing header 'x,y,w'")
    return WeightedPlanarMeasure(np.array(xs), np.array(ys), np.array(ws), name)


def save_csv(m: WeightedPlanarMeasure, path) -> None:
    Path(path).write_text(dumps_csv(m))


def load_csv(path) -> WeightedPlanarMeasure:
    p = Path(path)
    return loads_csv(p.read_text(), name=p.stem)


# ------------------------------------------------------------- normalization

@dataclass(frozen=True)
class NormalizeTransform:
    """``p -> scale * (p - (cx, cy)) + (0.5, 0.5)``."""

    scale: float = 1.0
    cx: float = 0.5
    cy: float = 0.5

    def forward(self, xs, ys):
        return self.scale * (np.asarray(xs) - self.cx) + 0.5, self.scale * (np.asarray(ys) - self.cy) + 0.5

    def inverse(self, xs, ys):
        return (np.asarray(xs) - 0.5) / self.scale + self.cx, (np.asarray(ys) - 0.5) / self.scale + self.cy

    def length_to_original(self, length: float) -> float:
        return length / self.scale

    def to_json(self) -> dict:
        return {"scale": self.scale, "cx": self.cx, "cy": self.cy}


def normalize(m: WeightedPlanarMeasure) -> tuple[WeightedPlanarMeasure, NormalizeTransform]:
    """Similarity map sending the bounding box into ``[1/8, 7/8]^2`` (longest side 3/4)."""
    if m.n == 0:
        raise EmptyMeasureError("cannot normalize an empty measure")
    x0, x1 = float(m.xs.min()), float(m.xs.max())
    y0, y1 = float(m.ys.min()), float(m.ys.max())
    side = max(x1 - x0, y1 - y0)
    scale = 0.75 / side if side > 0 else 1.0
    t = NormalizeTransform(scale, 0.5 * (x0 + x1), 0.5 * (y0 + y1))
    xs, ys = t.forward(m.xs, m.ys)
    return WeightedPlanarMeasure(xs, ys, m.ws, m.name), t
