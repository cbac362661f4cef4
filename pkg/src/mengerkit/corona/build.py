"""Top(E): pre-selection, elimination, stop families and good sets."""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field

import numpy as np

from ..errors import EmptyMeasureError
from ..measure import WeightedPlanarMeasure, total_mass
from ..squares import DyadicSquare
from .classify import BadSquare, CoronaContext, CoronaParams, build_bad


def root_square(m: WeightedPlanarMeasure) -> DyadicSquare:
    """4-dyadic ``R_0`` whose central quarter-cell is the smallest dyadic square containing E."""
    x0, x1 = float(m.xs.min()), float(m.xs.max())
    y0, y1 = float(m.ys.min()), float(m.ys.max())
    diam = max(x1 - x0, y1 - y0)
    level = -math.frexp(diam)[1] if diam > 0 else 0
    while True:
        i0, i1 = math.floor(math.ldexp(x0, level)), math.floor(math.ldexp(x1, level))
        j0, j1 = math.floor(math.ldexp(y0, level)), math.floor(math.ldexp(y1, level))
        if i0 == i1 and j0 == j1:
            break
        level -= 1
    return DyadicSquare(level, i0 - 1, j0 - 1, True)


@dataclass
class TopSquare:
    square: DyadicSquare
    order: int                      # position in the elimination order
    generators: list                # keys of squares R with this square in Bad(R)
    kinds: list                     # classification tags from those generators
    bad: list = field(default_factory=list)   # BadSquare entries generated by this square
    stop: list = field(default_factory=list)  # keys of Stop(R)
    good: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))

    @property
    def kind(self) -> str:
        return self.kinds[0] if self.kinds else "ROOT"


@dataclass
class CoronaDecomposition:
    params: CoronaParams
    root: DyadicSquare
    resolution: float
    nodes: dict                     # key -> TopSquare, in elimination order
    eliminated: int = 0
    context: CoronaContext | None = field(default=None, repr=False)

    @property
    def top(self) -> list[DyadicSquare]:
        return [t.square for t in self.nodes.values()]

    def node(self, q: DyadicSquare) -> TopSquare:
        return self.nodes[q.key()]

    def stop(self, R: DyadicSquare) -> list[DyadicSquare]:
        return [self.nodes[k].square for k in self.nodes[R.key()].stop]

    def good(self, R: DyadicSquare) -> np.ndarray:
        return self.nodes[R.key()].good

    def to_json(self, transform=None) -> dict:
        out_nodes = []
        for t in self.nodes.values():
            entry = {
                "square": t.square.to_json(),
                "side": t.square.side,
                "order": t.order,
                "kind": t.kind,
                "kinds": list(t.kinds),
                "generators": [list(k) for k in t.generators],
                "stop": [list(k) for k in t.stop],
                "good_atoms": [int(i) for i in t.good],
                "bad": [
                    {"square": b.square.to_json(), "kind": b.kind, "classification": b.classification.to_json(), "atom": b.center_atom}
                    for b in t.bad
                ],
            }
            if transform is not None:
                (ox,), (oy,) = transform.inverse([t.square.x0], [t.square.y0])
                entry["original"] = {"x0": float(ox), "y0": float(oy), "side": transform.length_to_original(t.square.side)}
            out_nodes.append(entry)
        return {
            "params": self.params.to_json(),
            "root": self.root.to_json(),
            "resolution": self.resolution,
            "eliminated": self.eliminated,
            "top": out_nodes,
        }


def _contains(outer: DyadicSquare, inner: DyadicSquare) -> bool:
    return outer.contains_square(inner)


def build_top(
    m: WeightedPlanarMeasure,
    params: CoronaParams | None = None,
    resolution: float | None = None,
    ctx: CoronaContext | None = None,
) -> CoronaDecomposition:
    """Run the stopping-time construction and the elimination algorithm.

    Bad(R) is generated only for chosen squares: an unchosen square is
    unnecessary, so its children could only survive through other parents.
    """
    if m.n == 0:
        raise EmptyMeasureError("build_top needs a nonempty measure")
    params = params or CoronaParams()
    ctx = ctx or CoronaContext(m, resolution)
    root = root_square(m)

    # alive incoming edges per square; the root is available unconditionally
    alive: dict = {root.key(): [None]}
    info: dict = {root.key(): (root, [], [])}  # key -> (square, generator keys, kinds)
    chosen: dict = {}
    heap = [((-root.side, root.key()), root.key())]
    queued = {root.key()}
    eliminated = 0
    while heap:
        _, key = heapq.heappop(heap)
        queued.discard(key)
        if key in chosen or not alive.get(key):
            continue
        sq, gens, kinds = info[key]
        node = TopSquare(sq, len(chosen), gens, kinds)
        chosen[key] = node
        # kill edges R -> Q with Q inside the newly chosen square and l(sq) <= l(R)/8
        for qkey in list(alive):
            if qkey in chosen or not alive[qkey]:
                continue
            qsq = info[qkey][0]
            if qsq.side >= sq.side or not _contains(sq, qsq):
                continue
            keep = [g for g in alive[qkey] if g is None or not sq.side <= info[g][0].side / 8]
            if len(keep) != len(alive[qkey]):
                alive[qkey] = keep
                if not keep:
                    eliminated += 1
        bads = build_bad(m, sq, params, ctx)
        node.bad = bads
        for b in bads:
            bkey = b.square.key()
            if bkey in chosen:
                continue
            if bkey not in info:
                info[bkey] = (b.square, [], [])
            info[bkey][1].append(key)
            info[bkey][2].append(b.kind)
            alive.setdefault(bkey, []).append(key)
            if bkey not in queued:
                heapq.heappush(heap, ((-b.square.side, bkey), bkey))
                queued.add(bkey)

    d = CoronaDecomposition(params, root, ctx.resolution, chosen, eliminated, ctx)
    _stop_and_good(d, m)
    return d


def _stop_and_good(d: CoronaDecomposition, m: WeightedPlanarMeasure) -> None:
    sqs = [t.square for t in d.nodes.values()]
    keys = [q.key() for q in sqs]
    x0 = np.array([q.x0 for q in sqs])
    y0 = np.array([q.y0 for q in sqs])
    side = np.array([q.side for q in sqs])
    x1, y1 = x0 + side, y0 + side
    for t in d.nodes.values():
        R = t.square
        t3 = R.scaled(3.0)
        cand = np.flatnonzero(
            (side <= R.side / 8) & (x0 < t3.x1) & (t3.x0 < x1) & (y0 < t3.y1) & (t3.y0 < y1)
        )
        stop = []
        for c in cand:
            others = cand[cand != c]
            inside = (x0[others] <= x0[c]) & (x1[c] <= x1[others]) & (y0[others] <= y0[c]) & (y1[c] <= y1[others])
            if not inside.any():
                stop.append(c)
        t.stop = [keys[c] for c in stop]
        in3 = t3.contains_mask(m.xs, m.ys)
        covered = np.zeros(m.n, dtype=bool)
        for c in stop:
            covered |= (m.xs >= x0[c]) & (m.xs < x1[c]) & (m.ys >= y0[c]) & (m.ys < y1[c])
        t.good = np.flatnonzero(in3 & ~covered)


# ------------------------------------------------------------------ audits

@dataclass(frozen=True)
class PackingAudit:
    lhs: float
    rhs_base: float
    ratio: float
    mass: float
    c2: float
    top_count: int

    def to_json(self) -> dict:
        return {
            "lhs": self.lhs,
            "rhs_base": self.rhs_base,
            "ratio": self.ratio,
            "mass": self.mass,
            "c2": self.c2,
            "top_count": self.top_count,
        }


def packing_audit(d: CoronaDecomposition, m: WeightedPlanarMeasure, c2: float | None = None) -> PackingAudit:
    """``sum_{Q in Top} theta(Q)^2 mu(Q)`` against ``mu(E) + c^2(mu)``."""
    ctx = d.context or CoronaContext(m, d.resolution)
    terms = []
    for q in d.top:
        mq = ctx.mass(q)
        terms.append((mq / q.side) ** 2 * mq)
    lhs = math.fsum(terms)
    mass = total_mass(m)
    c2v = ctx.c2() if c2 is None else float(c2)
    rhs = mass + c2v
    return PackingAudit(lhs, rhs, lhs / rhs if rhs > 0 else math.inf, mass, c2v, len(terms))


def stop_overlap(d: CoronaDecomposition, m: WeightedPlanarMeasure) -> int:
    """Largest number of ``Q/2``, ``Q`` in a single Stop(R), containing one atom."""
    worst = 0
    for t in d.nodes.values():
        cnt = np.zeros(m.n, dtype=np.int64)
        for k in t.stop:
            cnt += d.nodes[k].square.half().contains_mask(m.xs, m.ys)
        if cnt.size:
            worst = max(worst, int(cnt.max()))
    return worst


def density_audit(d: CoronaDecomposition, m: WeightedPlanarMeasure) -> float:
    """Empirical ``C_4``: max of ``mu(P) / (A theta(R) l(P))`` over scanned ``P`` meeting ``Q in Bad(R)``.

    Scanned squares are the dyadic and 4-dyadic squares with
    ``l(Q) <= l(P) <= l(R)`` that meet ``Q``.
    """
    ctx = d.context or CoronaContext(m, d.resolution)
    A = d.params.A
    worst = 0.0
    for t in d.nodes.values():
        R = t.square
        theta_r = ctx.mass(R) / R.side
        if theta_r <= 0:
            continue
        for b in t.bad:
            Q = b.square
            for level in range(R.J, Q.J + 1):
                unit = math.ldexp(1.0, -level)
                for four in (False, True):
                    u = unit / 4 if four else unit
                    span = 4 if four else 1
                    i0 = math.floor(Q.x0 / u) - span + 1
                    i1 = math.ceil(Q.x1 / u) - 1
                    j0 = math.floor(Q.y0 / u) - span + 1
                    j1 = math.ceil(Q.y1 / u) - 1
                    ii, jj = np.meshgrid(np.arange(i0, i1 + 1), np.arange(j0, j1 + 1), indexing="ij")
                    ms = ctx.box_mass(ii.ravel() * u, jj.ravel() * u, span * u)
                    worst = max(worst, float(ms.max()) / (A * theta_r * span * u))
    return worst


@dataclass(frozen=True)
class StructureReport:
    doubling_ok: bool           # every Top square is (doubling_a, doubling_b)-doubling
    root_covers: bool           # E lies in R_0
    stop_ok: bool               # meets 3R, l(P) <= l(R)/8, maximal
    good_ok: bool               # G(R) in 3R and outside every stop square
    overlap: int                # max count of half stop squares at an atom
    worst_doubling: float       # max mu(a Q) / mu(Q) over Top

    @property
    def ok(self) -> bool:
        return self.doubling_ok and self.root_covers and self.stop_ok and self.good_ok

    def to_json(self) -> dict:
        return {
            "doubling_ok": self.doubling_ok,
            "root_covers": self.root_covers,
            "stop_ok": self.stop_ok,
            "good_ok": self.good_ok,
            "overlap": self.overlap,
            "worst_doubling": self.worst_doubling,
            "ok": self.ok,
        }


def verify_structure(d: CoronaDecomposition, m: WeightedPlanarMeasure) -> StructureReport:
    """Recheck the decomposition invariants directly from the squares and the atoms."""
    ctx = d.context or CoronaContext(m, d.resolution)
    p = d.params
    worst = 0.0
    for q in d.top:
        mq = ctx.mass(q)
        big = ctx.mass(q.scaled(p.doubling_a))
        worst = max(worst, big / mq if mq > 0 else math.inf)
    doubling_ok = worst <= p.doubling_b
    root_covers = bool(d.root.contains_mask(m.xs, m.ys).all())
    top = d.top
    stop_ok = good_ok = True
    for t in d.nodes.values():
        R = t.square
        t3 = R.scaled(3.0)
        stop = [d.nodes[k].square for k in t.stop]
        for P in stop:
            if not (t3.intersects(P) and P.side <= R.side / 8):
                stop_ok = False
            for Q in top:
                if Q != P and Q.contains_square(P) and t3.intersects(Q) and Q.side <= R.side / 8:
                    stop_ok = False
        # every qualifying Top square lies inside some stop square
        for Q in top:
            if t3.intersects(Q) and Q.side <= R.side / 8 and not any(P.contains_square(Q) for P in stop):
                stop_ok = False
        g = t.good
        if g.size:
            gx, gy = m.xs[g], m.ys[g]
            if not t3.contains_mask(gx, gy).all() or any(P.contains_mask(gx, gy).any() for P in stop):
                good_ok = False
    return StructureReport(doubling_ok, root_covers, stop_ok, good_ok, stop_overlap(d, m), worst)
