"""Dyadic grid tools: doubling squares, balanced squares, greedy covering, quadtree."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import CenterNotInHalfError, EmptySquareError
from .measure import WeightedPlanarMeasure, mass_in
from .squares import DyadicSquare, Square

# cells per side in the balanced-square search
BALANCE_N = 400


def concentric_scale(q, lam: float) -> Square:
    """Square with the centre of ``q`` and side ``lam * l(q)``."""
    if not lam > 0:
        raise ValueError(f"lambda must be positive, got {lam}")
    return q.as_square().scaled(lam)


def is_doubling(m: WeightedPlanarMeasure, q, a: float, b: float) -> bool:
    """``mu(aQ) <= b mu(Q)``."""
    return mass_in(m, concentric_scale(q, a)) <= b * mass_in(m, q)


def find_doubling_square(
    m: WeightedPlanarMeasure,
    center,
    a: float,
    b: float,
    max_level: int,
    finest_level: int | None = None,
) -> Square | None:
    """Largest ``(a, b)``-doubling square centred at ``center`` with side ``2^-k``, ``k >= max_level``.

    Levels are scanned from ``max_level`` to ``finest_level`` (default ``max_level + 40``);
    ``None`` means no scanned square is doubling.
    """
    cx, cy = center
    last = max_level + 40 if finest_level is None else finest_level
    for k in range(max_level, last + 1):
        q = Square.centered(cx, cy, math.ldexp(1.0, -k))
        if is_doubling(m, q, a, b):
            return q
    return None


# ------------------------------------------------------------------ balance

@dataclass(frozen=True)
class BalanceWitness:
    balanced: bool
    q1: Square | None = None
    q2: Square | None = None
    p: Square | None = None
    mass_q: float = 0.0
    mass_p: float | None = None
    bound: float = 1.0  # the guaranteed fraction 1 - 2e5 b
    heavy_cells: int = 0

    @property
    def outcome(self) -> str:
        return "balanced" if self.balanced else "unbalanced"

    def to_json(self) -> dict:
        out = {"outcome": self.outcome, "mass_q": self.mass_q, "bound": self.bound, "heavy_cells": self.heavy_cells}
        for k in ("q1", "q2", "p"):
            v = getattr(self, k)
            if v is not None:
                out[k] = v.to_json()
        if self.mass_p is not None:
            out["mass_p"] = self.mass_p
        return out


def balance_test(m: WeightedPlanarMeasure, q, a: float = 1 / 40, b: float = 1e-6) -> BalanceWitness:
    """Look for two heavy, far-apart cells of the 400x400 partition of ``q``.

    Heavy means ``mu(cell) >= b mu(Q)``; far means ``dist >= a l(Q)``.  Without
    such a pair, every heavy cell sits in a small block and the rest of ``Q``
    carries less than ``400^2 b mu(Q)``.
    """
    if not (1 / 40 <= a <= 39 / 400):
        raise ValueError("a must lie in [1/40, 39/400] for the 400-cell partition")
    sq = q.as_square()
    sel = np.flatnonzero(sq.contains_mask(m.xs, m.ys))
    mass_q = math.fsum(m.ws[sel])
    if mass_q <= 0:
        raise EmptySquareError("balance_test needs mu(Q) > 0")
    N = BALANCE_N
    cell = sq.side / N
    edges_x = sq.x0 + cell * np.arange(N + 1)
    edges_y = sq.y0 + cell * np.arange(N + 1)
    ci = np.clip(np.searchsorted(edges_x, m.xs[sel], side="right") - 1, 0, N - 1)
    cj = np.clip(np.searchsorted(edges_y, m.ys[sel], side="right") - 1, 0, N - 1)
    flat = ci * N + cj
    occ, inv = np.unique(flat, return_inverse=True)
    cm = np.zeros(occ.size)
    np.add.at(cm, inv.reshape(-1), m.ws[sel])
    oi, oj = occ // N, occ % N
    bound = 1.0 - 2e5 * b

    def cell_square(i, j, k=1):
        return Square(float(edges_x[i]), float(edges_y[j]), k * cell)

    heavy = np.flatnonzero(cm >= b * mass_q)
    # deterministic order: heaviest first, then by grid index
    heavy = heavy[np.lexsort((oj[heavy], oi[heavy], -cm[heavy]))]
    thr = (a * N) ** 2
    hi, hj = oi[heavy], oj[heavy]
    for t in range(heavy.size):
        gx = np.maximum(np.abs(hi[t + 1:] - hi[t]) - 1, 0)
        gy = np.maximum(np.abs(hj[t + 1:] - hj[t]) - 1, 0)
        far = np.flatnonzero(gx * gx + gy * gy >= thr)
        if far.size:
            u = t + 1 + int(far[0])
            q1 = cell_square(int(hi[t]), int(hj[t]))
            q2 = cell_square(int(hi[u]), int(hj[u]))
            return BalanceWitness(True, q1=q1, q2=q2, mass_q=mass_q, bound=bound, heavy_cells=int(heavy.size))

    if heavy.size:
        i0, i1 = int(hi.min()), int(hi.max())
        j0, j1 = int(hj.min()), int(hj.max())
    else:
        top = int(np.lexsort((oj, oi, -cm))[0])
        i0 = i1 = int(oi[top])
        j0 = j1 = int(oj[top])
    k = max(i1 - i0, j1 - j0) + 1
    p = None
    for grow in (0, 1):
        kk = min(k + 2 * grow, N)
        x0 = min(max(i0 - grow, 0), N - kk)
        y0 = min(max(j0 - grow, 0), N - kk)
        p = cell_square(x0, y0, kk)
        mass_p = mass_in(m, p)
        if mass_p >= bound * mass_q:
            break
    if p.side > sq.side / 10:
        raise AssertionError("concentration square exceeds l(Q)/10")
    return BalanceWitness(False, p=p, mass_q=mass_q, mass_p=mass_p, bound=bound, heavy_cells=int(heavy.size))


def find_balanced_ancestor(
    m: WeightedPlanarMeasure, q, R, a: float = 1 / 40, b: float = 1e-6
) -> tuple[Square, BalanceWitness] | None:
    """Smallest balanced ``2^n q`` (``n >= 1``) with side at most ``8 l(R)``."""
    limit = 8 * R.side
    n = 1
    while True:
        cand = concentric_scale(q, 2.0 ** n)
        if cand.side > limit:
            return None
        if mass_in(m, cand) > 0:
            w = balance_test(m, cand, a, b)
            if w.balanced:
                return cand, w
        n += 1


# --------------------------------------------------------------- covering

@dataclass(frozen=True)
class CoverSelection:
    squares: list
    indices: list[int]
    overlap: int

    def to_json(self) -> dict:
        return {"indices": self.indices, "overlap": self.overlap}


def _sort_key(q):
    if isinstance(q, DyadicSquare):
        return (-q.side, q.level, q.i, q.j)
    return (-q.side, 0, q.x0, q.y0)


def max_overlap(squares) -> int:
    """Largest number of half-open squares sharing a point."""
    if not squares:
        return 0
    sq = [s.as_square() for s in squares]
    x0 = np.array([s.x0 for s in sq])
    x1 = np.array([s.x1 for s in sq])
    y0 = np.array([s.y0 for s in sq])
    y1 = np.array([s.y1 for s in sq])
    best = 0
    # an optimal point can be taken at (x0_a, y0_b)
    for xa in np.unique(x0):
        act = (x0 <= xa) & (xa < x1)
        if not act.any():
            continue
        ys = np.concatenate([y0[act], y1[act]])
        ev = np.concatenate([np.ones(act.sum(), int), -np.ones(act.sum(), int)])
        order = np.lexsort((ev, ys))  # closings before openings at equal y
        best = max(best, int(np.max(np.cumsum(ev[order]))))
    return best


def besicovitch_select(candidates) -> CoverSelection:
    """Greedy size-ordered selection keeping squares whose centre is not yet covered."""
    cands = list(candidates)
    for t, (q, c) in enumerate(cands):
        if not concentric_scale(q, 0.5).contains_point(c[0], c[1]):
            raise CenterNotInHalfError(f"candidate {t}: centre {tuple(c)} not in half of its square")
    order = sorted(range(len(cands)), key=lambda t: (_sort_key(cands[t][0]), t))
    bounds = np.empty((len(cands), 4))
    kept: list[int] = []
    for t in order:
        q, c = cands[t]
        k = len(kept)
        if k:
            b = bounds[:k]
            if np.any((b[:, 0] <= c[0]) & (c[0] < b[:, 1]) & (b[:, 2] <= c[1]) & (c[1] < b[:, 3])):
                continue
        s = q.as_square()
        bounds[k] = (s.x0, s.x1, s.y0, s.y1)
        kept.append(t)
    squares = [cands[t][0] for t in kept]
    return CoverSelection(squares, kept, max_overlap(squares))


# --------------------------------------------------------------- quadtree

@dataclass(frozen=True, eq=False)
class QuadTree:
    """Array-backed quadtree; each node owns a contiguous slice of ``order``."""

    root: Square
    order: np.ndarray
    x0: np.ndarray
    y0: np.ndarray
    side: np.ndarray
    start: np.ndarray
    stop: np.ndarray
    child: np.ndarray  # index of first of 4 children, -1 for leaves
    node_mass: np.ndarray
    xs: np.ndarray = field(repr=False)
    ys: np.ndarray = field(repr=False)
    ws: np.ndarray = field(repr=False)

    @classmethod
    def build(cls, m: WeightedPlanarMeasure, root: Square | None = None, leaf_size: int = 8, max_depth: int = 40) -> QuadTree:
        if root is None:
            span = max(float(np.ptp(m.xs)) if m.n else 1.0, float(np.ptp(m.ys)) if m.n else 1.0)
            side = 2.0 ** math.ceil(math.log2(span)) * 2 if span > 0 else 1.0
            root = Square(float(m.xs.min()) if m.n else 0.0, float(m.ys.min()) if m.n else 0.0, side)
        inside = np.flatnonzero(root.contains_mask(m.xs, m.ys))
        if inside.size != m.n:
            raise ValueError("root square must contain every atom")
        order = inside.copy()
        nodes = {"x0": [], "y0": [], "side": [], "start": [], "stop": [], "child": [], "mass": []}

        def add(x0, y0, s, a, b):
            nodes["x0"].append(x0)
            nodes["y0"].append(y0)
            nodes["side"].append(s)
            nodes["start"].append(a)
            nodes["stop"].append(b)
            nodes["child"].append(-1)
            nodes["mass"].append(math.fsum(m.ws[order[a:b]]))
            return len(nodes["x0"]) - 1

        stack = [(add(root.x0, root.y0, root.side, 0, order.size), 0)]
        while stack:
            nid, depth = stack.pop()
            a, b = nodes["start"][nid], nodes["stop"][nid]
            if b - a <= leaf_size or depth >= max_depth:
                continue
            x0, y0, s = nodes["x0"][nid], nodes["y0"][nid], nodes["side"][nid] / 2
            idx = order[a:b]
            qx = (m.xs[idx] >= x0 + s).astype(int)
            qy = (m.ys[idx] >= y0 + s).astype(int)
            quad = 2 * qx + qy
            perm = np.argsort(quad, kind="stable")
            order[a:b] = idx[perm]
            counts = np.bincount(quad, minlength=4)
            first = None
            pos = a
            for t in range(4):
                cid = add(x0 + s * (t // 2), y0 + s * (t % 2), s, pos, pos + counts[t])
                first = cid if first is None else first
                pos += counts[t]
                stack.append((cid, depth + 1))
            nodes["child"][nid] = first
        arr = {k: np.array(v) for k, v in nodes.items()}
        return cls(root, order, arr["x0"], arr["y0"], arr["side"], arr["start"], arr["stop"], arr["child"], arr["mass"], m.xs, m.ys, m.ws)

    @property
    def n_nodes(self) -> int:
        return int(self.x0.size)

    def query(self, sq) -> np.ndarray:
        """Indices of atoms in the half-open square ``sq``."""
        sq = sq.as_square()
        out = []
        stack = [0]
        while stack:
            k = stack.pop()
            nx0, ny0, s = self.x0[k], self.y0[k], self.side[k]
            if nx0 >= sq.x1 or nx0 + s <= sq.x0 or ny0 >= sq.y1 or ny0 + s <= sq.y0:
                continue
            a, b = self.start[k], self.stop[k]
            if a == b:
                continue
            if sq.x0 <= nx0 and nx0 + s <= sq.x1 and sq.y0 <= ny0 and ny0 + s <= sq.y1:
                out.append(self.order[a:b])
            elif self.child[k] < 0:
                idx = self.order[a:b]
                out.append(idx[sq.contains_mask(self.xs[idx], self.ys[idx])])
            else:
                stack.extend(range(self.child[k], self.child[k] + 4))
        return np.sort(np.concatenate(out)) if out else np.zeros(0, dtype=np.int64)

    def mass(self, sq) -> float:
        return math.fsum(self.ws[self.query(sq)])
