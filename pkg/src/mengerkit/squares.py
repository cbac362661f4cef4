"""Axis-parallel half-open squares and their dyadic / 4-dyadic variants."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class Square:
    """Half-open square ``[x0, x0+side) x [y0, y0+side)``."""

    x0: float
    y0: float
    side: float

    @property
    def x1(self) -> float:
        return self.x0 + self.side

    @property
    def y1(self) -> float:
        return self.y0 + self.side

    @property
    def center(self) -> tuple[float, float]:
        return (self.x0 + 0.5 * self.side, self.y0 + 0.5 * self.side)

    @classmethod
    def centered(cls, cx: float, cy: float, side: float) -> Square:
        return cls(cx - 0.5 * side, cy - 0.5 * side, side)

    def as_square(self) -> Square:
        return self

    def scaled(self, lam: float) -> Square:
        """Concentric square with side ``lam * side``."""
        cx, cy = self.center
        return Square.centered(cx, cy, lam * self.side)

    def contains_mask(self, xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
        return (xs >= self.x0) & (xs < self.x1) & (ys >= self.y0) & (ys < self.y1)

    def contains_point(self, x: float, y: float) -> bool:
        return self.x0 <= x < self.x1 and self.y0 <= y < self.y1

    def contains_square(self, other: Square) -> bool:
        o = other.as_square()
        return o.x0 >= self.x0 and o.x1 <= self.x1 and o.y0 >= self.y0 and o.y1 <= self.y1

    def intersects(self, other: Square) -> bool:
        o = other.as_square()
        return (
            self.x0 < o.x1 and o.x0 < self.x1 and self.y0 < o.y1 and o.y0 < self.y1
        )

    def dist_to_point(self, x: float, y: float) -> float:
        dx = max(self.x0 - x, 0.0, x - self.x1)
        dy = max(self.y0 - y, 0.0, y - self.y1)
        return math.hypot(dx, dy)

    def dist_to_points(self, xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
        dx = np.maximum(np.maximum(self.x0 - xs, 0.0), xs - self.x1)
        dy = np.maximum(np.maximum(self.y0 - ys, 0.0), ys - self.y1)
        return np.hypot(dx, dy)

    def dist_to_square(self, other: Square) -> float:
        o = other.as_square()
        dx = max(o.x0 - self.x1, 0.0, self.x0 - o.x1)
        dy = max(o.y0 - self.y1, 0.0, self.y0 - o.y1)
        return math.hypot(dx, dy)

    def to_json(self) -> dict:
        return {"x0": self.x0, "y0": self.y0, "side": self.side}


@dataclass(frozen=True, order=True)
class DyadicSquare:
    """Dyadic square of level ``n`` (unit ``2**-n``) at grid index ``(i, j)``.

    With ``four_dyadic`` set the square spans a 4x4 block of level-``n`` cells,
    ``[i 2^-n, (i+4) 2^-n) x [j 2^-n, (j+4) 2^-n)``.
    """

    level: int
    i: int
    j: int
    four_dyadic: bool = False

    @property
    def unit(self) -> float:
        return math.ldexp(1.0, -self.level)

    @property
    def side(self) -> float:
        return self.unit * (4 if self.four_dyadic else 1)

    @property
    def J(self) -> int:
        """Integer ``n`` with side ``2**-n``."""
        return self.level - 2 if self.four_dyadic else self.level

    @property
    def x0(self) -> float:
        return self.i * self.unit

    @property
    def y0(self) -> float:
        return self.j * self.unit

    @property
    def x1(self) -> float:
        return self.x0 + self.side

    @property
    def y1(self) -> float:
        return self.y0 + self.side

    @property
    def center(self) -> tuple[float, float]:
        return self.as_square().center

    def as_square(self) -> Square:
        return Square(self.x0, self.y0, self.side)

    def key(self) -> tuple[int, int, int, bool]:
        return (self.level, self.i, self.j, self.four_dyadic)

    def half(self) -> Square:
        return self.as_square().scaled(0.5)

    def children(self) -> list[DyadicSquare]:
        if self.four_dyadic:
            raise ValueError("children() is defined for plain dyadic squares")
        n, i, j = self.level + 1, 2 * self.i, 2 * self.j
        return [DyadicSquare(n, i + a, j + b) for a in (0, 1) for b in (0, 1)]

    def contains_mask(self, xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
        return self.as_square().contains_mask(xs, ys)

    def contains_point(self, x: float, y: float) -> bool:
        return self.as_square().contains_point(x, y)

    def contains_square(self, other) -> bool:
        return self.as_square().contains_square(other)

    def intersects(self, other) -> bool:
        return self.as_square().intersects(other)

    def scaled(self, lam: float) -> Square:
        return self.as_square().scaled(lam)

    def dist_to_point(self, x: float, y: float) -> float:
        return self.as_square().dist_to_point(x, y)

    def dist_to_points(self, xs, ys):
        return self.as_square().dist_to_points(xs, ys)

    @classmethod
    def containing(cls, level: int, x: float, y: float) -> DyadicSquare:
        """The level-``level`` dyadic square containing ``(x, y)``."""
        return cls(level, math.floor(math.ldexp(x, level)), math.floor(math.ldexp(y, level)))

    @classmethod
    def from_json(cls, d: dict) -> DyadicSquare:
        return cls(int(d["level"]), int(d["i"]), int(d["j"]), bool(d.get("four_dyadic", False)))

    def to_json(self) -> dict:
        return {"level": self.level, "i": self.i, "j": self.j, "four_dyadic": self.four_dyadic}


def as_square(q) -> Square:
    return q.as_square()
