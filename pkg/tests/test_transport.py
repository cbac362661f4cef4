from __future__ import annotations

import math
from itertools import combinations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_measure
from mengerkit.capacity import CapacityParams
from mengerkit.curvature import c2_total
from mengerkit.errors import BadSpecError, MapUndefinedError, TooFewAtomsError
from mengerkit.generators import cantor4, segment
from mengerkit.measure import WeightedPlanarMeasure, total_mass
from mengerkit.transport import (
    BilipschitzMapSpec,
    capacity_ratio_experiment,
    empirical_bilip,
    pushforward,
    teocurv_experiment,
)


def dense_ratios(phi, m):
    px, py = phi.apply(m.xs, m.ys)
    r = [
        math.hypot(px[i] - px[j], py[i] - py[j]) / math.hypot(m.xs[i] - m.xs[j], m.ys[i] - m.ys[j])
        for i, j in combinations(range(m.n), 2)
    ]
    return min(r), max(r)


def test_parse():
    assert BilipschitzMapSpec.parse("shear:2").declared_L == 2.0
    assert BilipschitzMapSpec.parse("shear:0.25").declared_L == 4.0
    a = BilipschitzMapSpec.parse("affine:1,0,0,1")
    assert a.params == (1.0, 0.0, 0.0, 1.0, 0.0, 0.0) and a.declared_L == 1.0
    g = BilipschitzMapSpec.parse("graph:0,0;0.5,0.3;1,0")
    assert g.declared_L == pytest.approx((0.6 + math.sqrt(0.36 + 4)) / 2, rel=1e-15)
    s = BilipschitzMapSpec.parse("split")
    assert s.not_bilipschitz and math.isinf(s.declared_L)
    c = BilipschitzMapSpec.parse("compose:shear:2|affine:0,-1,1,0")
    assert c.kind == "composition" and len(c.stages) == 2 and c.declared_L == 2.0
    for bad in ["", "shear", "shear:-1", "shear:x", "affine:1,2,3", "graph:0,0", "graph:1,0;0,1", "split:1", "warp:3", "compose:"]:
        with pytest.raises(BadSpecError):
            BilipschitzMapSpec.parse(bad)


def test_singular_affine_is_flagged():
    a = BilipschitzMapSpec.affine(1, 2, 2, 4)
    assert a.not_bilipschitz and math.isinf(a.declared_L)
    assert a.to_json()["declared_L"] is None


@given(st.floats(-3, 3), st.floats(-3, 3), st.floats(-3, 3), st.floats(-3, 3))
@settings(max_examples=100, deadline=None)
def test_affine_declared_L_and_empirical_bounds(a, b, c, d):
    M = np.array([[a, b], [c, d]])
    s = np.linalg.svd(M, compute_uv=False)
    phi = BilipschitzMapSpec.affine(a, b, c, d, 0.3, -0.2)
    if s[1] < 1e-6:
        return
    assert phi.declared_L >= max(s[0], 1 / s[1]) * (1 - 1e-12)
    lo, hi = empirical_bilip(phi, random_measure(5, 40), pairs=500)
    assert s[1] * (1 - 1e-9) <= lo <= hi <= s[0] * (1 + 1e-9)


def test_graph_shift_L():
    for slope in (0.0, 0.5, 1.0, 3.0):
        phi = BilipschitzMapSpec.graph_shift([(0, 0), (1, slope), (2, 0)])
        assert phi.declared_L == pytest.approx((slope + math.sqrt(slope**2 + 4)) / 2, rel=1e-15)
        lo, hi = dense_ratios(phi, random_measure(1, 60))
        assert 1 / phi.declared_L - 1e-12 <= lo <= hi <= phi.declared_L + 1e-12


def test_apply_conventions():
    x, y = np.array([1.0, -1.0]), np.array([2.0, 3.0])
    assert [v.tolist() for v in BilipschitzMapSpec.shear(2).apply(x, y)] == [[1.0, -1.0], [4.0, 6.0]]
    assert [v.tolist() for v in BilipschitzMapSpec.split_translate().apply(x, y)] == [[1.0, -1.0], [2.0, 4.0]]
    gx, gy = BilipschitzMapSpec.graph_shift([(0, 0), (1, 1)]).apply(np.array([-1.0, 0.5, 3.0]), np.zeros(3))
    assert gy.tolist() == [0.0, 0.5, 1.0]


def test_compose_is_stagewise_pushforward():
    f = BilipschitzMapSpec.parse("shear:2")
    g = BilipschitzMapSpec.rotation(0.7, 0.1, 0.2)
    m = random_measure(2, 100)
    a = pushforward(BilipschitzMapSpec.compose([f, g]), m)
    b = pushforward(g, pushforward(f, m))
    assert np.array_equal(a.xs, b.xs) and np.array_equal(a.ys, b.ys) and np.array_equal(a.ws, b.ws)


def test_pushforward_preserves_weights_and_order():
    m = random_measure(3, 50)
    p = pushforward(BilipschitzMapSpec.shear(2), m)
    assert np.array_equal(p.ws, m.ws) and np.array_equal(p.xs, m.xs)
    assert np.array_equal(p.ys, 2 * m.ys)
    assert total_mass(p) == total_mass(m)
    ident = pushforward(BilipschitzMapSpec.affine(1, 0, 0, 1), m)
    assert np.array_equal(ident.xs, m.xs) and np.array_equal(ident.ys, m.ys)


def test_pushforward_undefined():
    m = WeightedPlanarMeasure(np.array([0.0, 1.0]), np.array([1e308, 0.0]), np.ones(2))
    with pytest.raises(MapUndefinedError):
        pushforward(BilipschitzMapSpec.shear(10), m)
    with pytest.raises(MapUndefinedError):
        pushforward(BilipschitzMapSpec.compose([BilipschitzMapSpec.shear(10), BilipschitzMapSpec.shear(1)]), m)


def test_rotation_preserves_c2():
    m = random_measure(4, 60)
    r = pushforward(BilipschitzMapSpec.rotation(math.pi / 4), m)
    assert c2_total(r).value == pytest.approx(c2_total(m).value, rel=1e-12)


def test_empirical_bilip():
    m = random_measure(6, 80)
    lo, hi = empirical_bilip(BilipschitzMapSpec.rotation(1.1), m)
    assert lo == pytest.approx(1, abs=1e-12) and hi == pytest.approx(1, abs=1e-12)
    phi = BilipschitzMapSpec.shear(2)
    lo, hi = empirical_bilip(phi, m)
    dlo, dhi = dense_ratios(phi, m)
    assert hi <= 2.2 and lo >= 1 / 1.1
    assert dlo <= lo <= hi <= dhi and dhi <= 2.0 + 1e-12 and dlo >= 1 - 1e-12
    with pytest.raises(TooFewAtomsError):
        empirical_bilip(phi, segment(1))


def test_split_translate_is_not_bilipschitz():
    m = WeightedPlanarMeasure(np.array([-1e-3, 1e-3, -0.5, 0.5]), np.zeros(4), np.ones(4))
    lo, hi = empirical_bilip(BilipschitzMapSpec.split_translate(), m, pairs=2000)
    assert hi > 10


def test_teocurv_examples():
    m = random_measure(7, 40)
    rep = teocurv_experiment(BilipschitzMapSpec.affine(1, 0, 0, 1), m)
    assert rep.c2_after == rep.c2_before and rep.ratio_teocurv <= 1
    assert rep.method == "exact" and rep.empirical_L == (1.0, 1.0)
    line = segment(50)
    assert teocurv_experiment(BilipschitzMapSpec.shear(2), line).ratio_teocurv == 0.0
    rep = teocurv_experiment(BilipschitzMapSpec.shear(2), cantor4(4))
    assert math.isfinite(rep.ratio_teocurv) and rep.ratio_teocurv > 0
    assert rep.empirical_L[0] <= rep.empirical_L[1]
    js = rep.to_json()
    assert js["monte_carlo"] is False and js["ratio_teocurv"] == rep.ratio_teocurv


def test_teocurv_monte_carlo_flagged():
    rep = teocurv_experiment(BilipschitzMapSpec.shear(2), cantor4(3), cutoff=10, samples=20000, seed=3)
    assert rep.method != "exact"
    assert rep.to_json()["monte_carlo"] is True and rep.details["seed"] == 3


def test_capacity_ratio_experiment():
    m = random_measure(8, 30)
    p = CapacityParams(passes=5)
    iso = capacity_ratio_experiment(BilipschitzMapSpec.rotation(0.4, 1.0, -2.0), m, p)
    assert iso["ratio"] == pytest.approx(1.0, rel=1e-9)
    dil = capacity_ratio_experiment(BilipschitzMapSpec.affine(3, 0, 0, 3), m, p)
    assert dil["ratio"] == pytest.approx(3.0, rel=1e-9)
    squeeze = capacity_ratio_experiment(BilipschitzMapSpec.affine(1e-3, 0, 0, 1), segment(40), p)
    assert squeeze["ratio"] < 0.2
    assert capacity_ratio_experiment(BilipschitzMapSpec.split_translate(), m, p)["not_bilipschitz"] is True
