"""Static SVG rendering of atoms, squares and curves."""

from __future__ import annotations

import numpy as np

COLORS = {"ROOT": "#555555", "HD": "#d62728", "HC": "#1f77b4", "LD": "#2ca02c", "NONE": "#999999"}


class Canvas:
    """Maps a world bounding box onto a square SVG viewport (y up)."""

    def __init__(self, x0: float, y0: float, x1: float, y1: float, size: int = 800, pad: float = 0.03):
        span = max(x1 - x0, y1 - y0) or 1.0
        self.x0 = x0 - pad * span
        self.y0 = y0 - pad * span
        self.span = span * (1 + 2 * pad)
        self.size = size
        self.items: list[str] = []

    def _tx(self, x) -> float:
        return (x - self.x0) / self.span * self.size

    def _ty(self, y) -> float:
        return self.size - (y - self.y0) / self.span * self.size

    def square(self, x0: float, y0: float, side: float, color: str, width: float = 1.0, dash: bool = False) -> None:
        s = side / self.span * self.size
        extra = ' stroke-dasharray="4,3"' if dash else ""
        self.items.append(
            f'<rect x="{self._tx(x0):.3f}" y="{self._ty(y0 + side):.3f}" width="{s:.3f}" height="{s:.3f}" '
            f'fill="none" stroke="{color}" stroke-width="{width}"{extra}/>'
        )

    def points(self, xs, ys, color: str = "#000000", r: float = 1.2) -> None:
        for x, y in zip(np.asarray(xs).tolist(), np.asarray(ys).tolist()):
            self.items.append(f'<circle cx="{self._tx(x):.3f}" cy="{self._ty(y):.3f}" r="{r}" fill="{color}"/>')

    def polyline(self, vertices, color: str = "#ff7f0e", width: float = 1.5) -> None:
        pts = " ".join(f"{self._tx(x):.3f},{self._ty(y):.3f}" for x, y in np.asarray(vertices).tolist())
        self.items.append(f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="{width}"/>')

    def render(self) -> str:
        head = f'<svg xmlns="http://www.w3.org/2000/svg" width="{self.size}" height="{self.size}" viewBox="0 0 {self.size} {self.size}">'
        return "\n".join([head, '<rect width="100%" height="100%" fill="white"/>', *self.items, "</svg>"]) + "\n"


def corona_svg(d, m) -> str:
    """Top squares coloured by classification, over the atoms."""
    r = d.root
    c = Canvas(r.x0, r.y0, r.x1, r.y1)
    for t in d.nodes.values():
        q = t.square
        c.square(q.x0, q.y0, q.side, COLORS.get(t.kind, "#999999"), 1.5 if t.kind == "ROOT" else 0.8)
    c.points(m.xs, m.ys)
    return c.render()


def measure_svg(m, curve=None) -> str:
    xs, ys = m.xs, m.ys
    if curve is not None:
        v = np.asarray(curve)
        xs, ys = np.concatenate([xs, v[:, 0]]), np.concatenate([ys, v[:, 1]])
    c = Canvas(float(xs.min()), float(ys.min()), float(xs.max()), float(ys.max()))
    if curve is not None:
        c.polyline(curve)
    c.points(m.xs, m.ys)
    return c.render()
