from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import rng
from mengerkit.capacity import CapacityParams, estimate_alpha, estimate_gamma, verify_feasibility
from mengerkit.errors import EmptySupportError
from mengerkit.measure import WeightedPlanarMeasure, growth_scan

FAST = CapacityParams(passes=8)


def cloud(seed: int, n: int = 25) -> np.ndarray:
    return rng(seed).random((n, 2))


def test_params_validation():
    for kw in ({"passes": -1}, {"step": 0}, {"eta": 0}, {"eta": -1}):
        with pytest.raises(ValueError):
            CapacityParams(**kw)


def test_verify_feasibility_examples():
    assert verify_feasibility(WeightedPlanarMeasure.empty()).feasible
    r = verify_feasibility(WeightedPlanarMeasure(np.zeros(1), np.zeros(1), np.array([10.0])), resolution=1.0)
    assert not r.growth_ok and r.growth_ratio == 10.0


def test_single_point_and_empty():
    assert estimate_gamma([[0.3, 0.4]]).value == 0.0
    assert estimate_gamma([[0.3, 0.4], [0.3, 0.4]]).value == 0.0
    with pytest.raises(EmptySupportError):
        estimate_gamma(np.zeros((0, 2)))


@pytest.mark.parametrize("seed", range(6))
def test_output_is_feasible(seed):
    pts = cloud(seed)
    est = estimate_gamma(pts, CapacityParams(passes=15, seed=seed))
    rep = verify_feasibility(est.measure, est.report.resolution)
    assert rep.feasible
    assert rep.growth_ratio <= 1 + 1e-9 and rep.curvature_ratio <= 1 + 1e-9
    assert est.value == math.fsum(est.measure.ws) and est.value > 0
    assert 0 < est.report.scale_applied <= 1


@given(st.integers(0, 10**6), st.sampled_from([1e-3, 0.5, 7.0, 1024.0]))
@settings(max_examples=15, deadline=None)
def test_dilation_covariance(seed, t):
    pts = cloud(seed, 12)
    a = estimate_gamma(pts, FAST).value
    b = estimate_gamma(pts * t, FAST).value
    assert b == pytest.approx(t * a, rel=1e-9)


@given(st.integers(0, 10**6), st.floats(0, 2 * math.pi), st.booleans())
@settings(max_examples=15, deadline=None)
def test_isometry_invariance(seed, angle, reflect):
    pts = cloud(seed, 12)
    c, s = math.cos(angle), math.sin(angle)
    q = pts @ np.array([[c, s], [-s, c]]) + (3.0, -1.0)
    if reflect:
        q[:, 0] = -q[:, 0]
    assert estimate_gamma(q, FAST).value == pytest.approx(estimate_gamma(pts, FAST).value, rel=1e-9)


def test_collinear_is_growth_projection_only():
    n = 11
    pts = np.stack([np.arange(n) / (n - 1), np.zeros(n)], axis=1)
    est = estimate_gamma(pts, CapacityParams(passes=0))
    assert est.report.curvature_ratio == 0.0
    # oracle: uniform start weight w, divide by the exhaustive growth ratio
    h = 0.1
    w = np.ones(n)
    g = growth_scan(pts[:, 0].copy(), pts[:, 1].copy(), w, h)[0]
    assert est.value == pytest.approx(n / g, rel=1e-12)
    # a closed ball of radius h about an atom holds three atoms, so value = 11 * 0.1 / 3
    assert est.value == pytest.approx(11 * 0.1 / 3, rel=1e-12)


def test_improvement_never_lowers_mass():
    pts = cloud(11)
    base = estimate_gamma(pts, CapacityParams(passes=0)).value
    better = estimate_gamma(pts, CapacityParams(passes=30))
    assert better.value >= base
    assert estimate_gamma(pts, CapacityParams(passes=30)).value == better.value


def test_eta():
    pts = cloud(12, 15)
    p = CapacityParams(passes=10)
    g = estimate_gamma(pts, p).value
    assert estimate_alpha(pts, p).value == g
    assert estimate_gamma(pts, CapacityParams(passes=10, eta=0.3)).params.eta == 1.0
    vals = [estimate_alpha(pts, CapacityParams(passes=10, eta=e)).value for e in (1.0, 0.5, 0.1, 0.01, 1e-4)]
    assert all(b <= a for a, b in zip(vals, vals[1:])) and vals[-1] < 1e-3 * vals[0]
    seg = np.stack([np.linspace(0, 1, 20), np.zeros(20)], axis=1)
    full = estimate_gamma(seg, p).value
    half = estimate_alpha(seg, CapacityParams(passes=10, eta=0.5))
    assert half.value == pytest.approx(full / 2, rel=1e-12)
    assert half.to_json()["eta"] == 0.5
    assert verify_feasibility(half.measure, half.report.resolution, 0.5).feasible


def test_json_fields():
    est = estimate_gamma(cloud(13, 10), FAST)
    js = est.to_json()
    assert set(js) >= {"value", "eta", "resolution", "passes", "seed", "feasibility"}
    assert js["feasibility"]["feasible"] is True
