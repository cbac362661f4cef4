"""Compiled triple-sum kernels.

Squared Menger curvature is evaluated as ``4 cross^2 / (|a-b|^2 |a-c|^2 |b-c|^2)``
with differences taken relative to the first point of the triple.
"""

from __future__ import annotations

import os

import numba
import numpy as np

# the portable pool avoids probing an optional TBB install at first parallel call
if "NUMBA_THREADING_LAYER" not in os.environ:
    numba.config.THREADING_LAYER = "workqueue"

_TINY = 1e-300


@numba.njit(cache=True, inline="always")
def _c2(ax, ay, bx, by, cx, cy):
    ux = bx - ax
    uy = by - ay
    vx = cx - ax
    vy = cy - ay
    dab = ux * ux + uy * uy
    dac = vx * vx + vy * vy
    wx = cx - bx
    wy = cy - by
    dbc = wx * wx + wy * wy
    if dab * dac < _TINY or dbc == 0.0:
        return 0.0
    cr = ux * vy - uy * vx
    return 4.0 * cr * cr / (dab * dac * dbc)


@numba.njit(cache=True, parallel=True)
def c2_upper_partials(x, y, w, eps):
    """Per-``i`` sums of ``c^2 w_i w_j w_k`` over ``i < j < k`` with all distances > eps.

    Each partial is accumulated serially (Neumaier), so the result does not
    depend on the thread count.  Returns ``(partials, admissible_counts)``.
    """
    n = x.size
    out = np.zeros(n)
    cnt = np.zeros(n, dtype=np.int64)
    for i in numba.prange(n):
        s = 0.0
        comp = 0.0
        c = 0
        xi = x[i]
        yi = y[i]
        for j in range(i + 1, n):
            dxj = x[j] - xi
            dyj = y[j] - yi
            if not (np.sqrt(dxj * dxj + dyj * dyj) > eps):
                continue
            wij = w[i] * w[j]
            for k in range(j + 1, n):
                dxk = x[k] - xi
                dyk = y[k] - yi
                if not (np.sqrt(dxk * dxk + dyk * dyk) > eps):
                    continue
                ex = x[k] - x[j]
                ey = y[k] - y[j]
                if not (np.sqrt(ex * ex + ey * ey) > eps):
                    continue
                c += 1
                v = _c2(xi, yi, x[j], y[j], x[k], y[k]) * wij * w[k]
                t = s + v
                if abs(s) >= abs(v):
                    comp += (s - t) + v
                else:
                    comp += (v - t) + s
                s = t
        out[i] = s + comp
        cnt[i] = c
    return out, cnt


@numba.njit(cache=True)
def kernel_matrix(x, y, w):
    """``K[i, j] = sum_k c(z_i, z_j, z_k)^2 w_k`` (symmetric, zero diagonal)."""
    n = x.size
    K = np.zeros((n, n))
    inv = np.empty((n, n))
    for i in range(n):
        for j in range(n):
            dx = x[j] - x[i]
            dy = y[j] - y[i]
            d = dx * dx + dy * dy
            inv[i, j] = 1.0 / d if d > 0.0 else 0.0
    bx = np.empty(n)
    by = np.empty(n)
    for i in range(n):
        for k in range(n):
            bx[k] = x[k] - x[i]
            by[k] = y[k] - y[i]
        invi = inv[i]
        Ki = K[i]
        wi = w[i]
        for j in range(i + 1, n):
            ax = bx[j]
            ay = by[j]
            s = 4.0 * invi[j]
            invj = inv[j]
            Kj = K[j]
            wj = w[j]
            acc = 0.0
            for k in range(j + 1, n):
                cr = ax * by[k] - ay * bx[k]
                c2 = s * cr * cr * invi[k] * invj[k]
                acc += c2 * w[k]
                Ki[k] += c2 * wj
                Kj[k] += c2 * wi
            Ki[j] += acc
    for i in range(n):
        for j in range(i + 1, n):
            v = K[i, j] + K[j, i]
            K[i, j] = v
            K[j, i] = v
    return K


@numba.njit(cache=True)
def c2_point_kernel(x, y, w, i, eps):
    """``sum_{j != k} c(z_i, z_j, z_k)^2 w_j w_k`` with all three distances > eps.

    Since ``eps >= 0`` the strict test also drops coincident pairs.
    """
    n = x.size
    s = 0.0
    comp = 0.0
    xi = x[i]
    yi = y[i]
    for j in range(n):
        dxj = x[j] - xi
        dyj = y[j] - yi
        if not (np.sqrt(dxj * dxj + dyj * dyj) > eps):
            continue
        for k in range(j + 1, n):
            dxk = x[k] - xi
            dyk = y[k] - yi
            if not (np.sqrt(dxk * dxk + dyk * dyk) > eps):
                continue
            ex = x[k] - x[j]
            ey = y[k] - y[j]
            if not (np.sqrt(ex * ex + ey * ey) > eps):
                continue
            v = 2.0 * _c2(xi, yi, x[j], y[j], x[k], y[k]) * w[j] * w[k]
            t = s + v
            if abs(s) >= abs(v):
                comp += (s - t) + v
            else:
                comp += (v - t) + s
            s = t
    return s + comp


@numba.njit(cache=True)
def c2_restricted_kernel(x, y, w, A, B, C, eps):
    s = 0.0
    comp = 0.0
    for a in A:
        for b in B:
            dx = x[b] - x[a]
            dy = y[b] - y[a]
            if not (np.sqrt(dx * dx + dy * dy) > eps):
                continue
            wab = w[a] * w[b]
            for c in C:
                ux = x[c] - x[a]
                uy = y[c] - y[a]
                if not (np.sqrt(ux * ux + uy * uy) > eps):
                    continue
                vx = x[c] - x[b]
                vy = y[c] - y[b]
                if not (np.sqrt(vx * vx + vy * vy) > eps):
                    continue
                v = _c2(x[a], y[a], x[b], y[b], x[c], y[c]) * wab * w[c]
                t = s + v
                if abs(s) >= abs(v):
                    comp += (s - t) + v
                else:
                    comp += (v - t) + s
                s = t
    return s + comp


@numba.njit(cache=True)
def box_masses(xs_sorted, ys_sorted, ws_sorted, x0, y0, side):
    """Half-open box masses for many boxes; atoms must be sorted by x."""
    m = x0.size
    out = np.zeros(m)
    for q in range(m):
        lo = np.searchsorted(xs_sorted, x0[q], side="left")
        hi = np.searchsorted(xs_sorted, x0[q] + side[q], side="left")
        ylo = y0[q]
        yhi = y0[q] + side[q]
        s = 0.0
        for t in range(lo, hi):
            yy = ys_sorted[t]
            if yy >= ylo and yy < yhi:
                s += ws_sorted[t]
        out[q] = s
    return out
