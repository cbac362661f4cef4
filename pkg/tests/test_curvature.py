from __future__ import annotations

import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_measure, rng
from mengerkit.curvature import (
    c2_auto,
    c2_monte_carlo,
    c2_point,
    c2_restricted,
    c2_total,
    cauchy_transform,
    curvature_kernel,
    k_operator,
    mv_identity_report,
    operator_norm_dense,
    operator_norm_estimate,
)
from mengerkit.errors import DimensionMismatchError, EpsTooLargeError, IndexOutOfRangeError
from mengerkit.generators import cantor4, segment
from mengerkit.geometry import menger_curvature
from mengerkit.measure import WeightedPlanarMeasure

TRI = WeightedPlanarMeasure.from_atoms([((0, 0), 1.0), ((1, 0), 1.0), ((0, 1), 1.0)])


def brute_c2(m, eps=0.0):
    pts = list(zip(m.xs.tolist(), m.ys.tolist()))
    total = 0.0
    for i, j, k in itertools.permutations(range(m.n), 3):
        p, q, r = pts[i], pts[j], pts[k]
        if min(math.dist(p, q), math.dist(p, r), math.dist(q, r)) > eps:
            total += menger_curvature(p, q, r) ** 2 * m.ws[i] * m.ws[j] * m.ws[k]
    return total


def brute_cauchy_norm_sq(m):
    """Direct expansion of sum_i w_i |sum_{j != i} w_j / (z_j - z_i)|^2."""
    z = [complex(x, y) for x, y in zip(m.xs.tolist(), m.ys.tolist())]
    total = 0.0
    for i in range(m.n):
        s = sum(m.ws[j] / (z[j] - z[i]) for j in range(m.n) if j != i)
        total += m.ws[i] * abs(s) ** 2
    return total


def brute_diagonal(m):
    z = [complex(x, y) for x, y in zip(m.xs.tolist(), m.ys.tolist())]
    return sum(m.ws[i] * m.ws[j] ** 2 / abs(z[i] - z[j]) ** 2 for i in range(m.n) for j in range(m.n) if i != j)


def test_c2_examples():
    assert c2_total(segment(30)).value == 0.0
    r = c2_total(TRI)
    assert r.value == pytest.approx(12.0, rel=1e-15)
    assert r.triple_count == 6 and r.method == "exact"
    assert c2_total(TRI, eps=10).value == 0.0


@pytest.mark.parametrize("seed", range(6))
def test_c2_matches_brute_force(seed):
    m = random_measure(seed, 9)
    assert c2_total(m).value == pytest.approx(brute_c2(m), rel=1e-12)
    eps = 0.3
    assert c2_total(m, eps).value == pytest.approx(brute_c2(m, eps), rel=1e-12)


def test_c2_point_examples():
    assert c2_point(3, segment(10)) == 0.0
    assert c2_point(0, TRI) == pytest.approx(4.0, rel=1e-15)
    assert c2_point(0, WeightedPlanarMeasure.from_atoms([((0, 0), 1.0)])) == 0.0
    with pytest.raises(IndexOutOfRangeError):
        c2_point(3, TRI)


@pytest.mark.parametrize("seed", range(4))
def test_c2_point_sums_to_total(seed):
    m = random_measure(seed, 40)
    s = math.fsum(m.ws[i] * c2_point(i, m) for i in range(m.n))
    assert s == pytest.approx(c2_total(m).value, rel=1e-12)


def test_c2_restricted_examples():
    m = random_measure(1, 15)
    allx = range(m.n)
    assert c2_restricted(m, [], allx, allx) == 0.0
    assert c2_restricted(m, allx, allx, allx) == pytest.approx(c2_total(m).value, rel=1e-12)
    assert c2_restricted(TRI, [0], [1], [2]) == pytest.approx(2.0, rel=1e-15)
    with pytest.raises(IndexOutOfRangeError):
        c2_restricted(TRI, [5], [1], [2])


def test_k_operator_examples():
    assert np.all(k_operator(TRI, 1, np.zeros(3)) == 0.0)
    assert np.all(k_operator(segment(8), 0, np.ones(8)) == 0.0)
    out = k_operator(TRI, 1, np.ones(3))
    # direct expansion: k(x, y) = c(x, y, third)^2 = 2 for every ordered pair
    pts = [(0, 0), (1, 0), (0, 1)]
    ref = [sum(menger_curvature(pts[a], pts[b], pts[3 - a - b]) ** 2 for b in range(3) if b != a) for a in range(3)]
    assert np.allclose(out, ref, rtol=1e-15) and np.allclose(out, 4.0)
    # at j = 0 the radius is 1 and the strict inequality drops the unit-distance pairs
    assert k_operator(TRI, 0, np.ones(3)).tolist() == pytest.approx([0.0, 2.0, 2.0])
    with pytest.raises(DimensionMismatchError):
        k_operator(TRI, 1, np.ones(2))


@pytest.mark.parametrize("j", [-1, 1, 3])
def test_k_operator_self_adjoint(j):
    m = random_measure(2, 60)
    g = rng(j + 10)
    f, h = g.normal(size=m.n), g.normal(size=m.n)
    K = curvature_kernel(m)
    lhs = math.fsum(k_operator(m, j, f, K) * h * m.ws)
    rhs = math.fsum(f * k_operator(m, j, h, K) * m.ws)
    assert lhs == pytest.approx(rhs, rel=1e-10)


def test_kernel_matches_brute_force():
    m = random_measure(4, 10)
    K = curvature_kernel(m)
    pts = list(zip(m.xs.tolist(), m.ys.tolist()))
    for a in range(m.n):
        for b in range(m.n):
            ref = sum(menger_curvature(pts[a], pts[b], pts[k]) ** 2 * m.ws[k] for k in range(m.n))
            assert K[a, b] == pytest.approx(ref, rel=1e-12, abs=1e-300)


def test_cauchy_examples():
    one = WeightedPlanarMeasure.from_atoms([((0, 0), 1.0)])
    assert cauchy_transform(one, (1, 0), 0.5) == -1
    assert cauchy_transform(one, (1, 0), 2.0) == 0
    pair = WeightedPlanarMeasure.from_atoms([((1, 0), 1.0), ((-1, 0), 1.0)])
    v = cauchy_transform(pair, (0, 1))
    assert v == pytest.approx(1j, abs=1e-15)


def test_mv_examples():
    r = mv_identity_report(TRI)
    assert (r.lhs, r.curvature_term, r.diagonal_term) == pytest.approx((7.0, 2.0, 5.0), rel=1e-15)
    assert abs(r.residual) <= 1e-14
    two = WeightedPlanarMeasure.from_atoms([((0, 0), 1.0), ((0.3, 0.4), 2.0)])
    r = mv_identity_report(two)
    assert r.curvature_term == 0.0 and r.lhs == r.diagonal_term
    r = mv_identity_report(segment(40))
    assert r.curvature_term == 0.0
    assert r.lhs == pytest.approx(r.diagonal_term, rel=1e-9)
    with pytest.raises(EpsTooLargeError):
        mv_identity_report(segment(5), eps=0.25)


@pytest.mark.parametrize("seed", range(10))
def test_discrete_identity_by_brute_expansion(seed):
    m = random_measure(seed, 3 + seed % 8)
    lhs = brute_cauchy_norm_sq(m)
    rhs = brute_c2(m) / 6 + brute_diagonal(m)
    assert lhs == pytest.approx(rhs, rel=1e-10)
    r = mv_identity_report(m)
    assert r.lhs == pytest.approx(lhs, rel=1e-12)
    assert abs(r.residual) <= 1e-9 * max(r.lhs, 1)


@given(st.integers(0, 10**6), st.floats(0.05, 20.0), st.floats(0.1, 10.0))
@settings(max_examples=20, deadline=None)
def test_c2_scaling_laws(seed, t, s):
    m = random_measure(seed, 25)
    base = c2_total(m).value
    assert c2_total(m.with_points(m.xs * t, m.ys * t)).value == pytest.approx(base / t**2, rel=1e-12)
    assert c2_total(m.with_weights(m.ws * s)).value == pytest.approx(base * s**3, rel=1e-12)


def test_c2_permutation_bitwise():
    m = random_measure(5, 50)
    perm = rng(1).permutation(m.n)
    assert c2_total(m.subset(perm)).value == c2_total(m).value


def test_monte_carlo_examples():
    assert c2_monte_carlo(segment(50), samples=10**4).value == 0.0
    r = c2_monte_carlo(TRI, samples=10**5, seed=3)
    assert abs(r.value - 12.0) <= 3 * r.stderr
    assert c2_monte_carlo(TRI, eps=5, samples=1000).value == 0.0
    assert r.to_json()["method"] == "monte_carlo" and r.to_json()["seed"] == 3


def test_monte_carlo_coverage():
    hits = 0
    for seed in range(20):
        m = random_measure(seed, 100)
        exact = c2_total(m).value
        r = c2_monte_carlo(m, samples=10**6, seed=seed)
        hits += abs(r.value - exact) <= 4 * r.stderr
    assert hits >= 19


def test_c2_auto_switches_at_cutoff():
    m = random_measure(1, 30)
    assert c2_auto(m, cutoff=30).method == "exact"
    assert c2_auto(m, cutoff=29, samples=1000).method == "monte_carlo"


def test_operator_norm_examples():
    one = WeightedPlanarMeasure.from_atoms([((0, 0), 1.0)])
    assert operator_norm_estimate(one).value == 0.0
    two = WeightedPlanarMeasure.from_atoms([((0, 0), 1.0), ((0.25, 0), 1.0)])
    assert operator_norm_estimate(two).value == pytest.approx(4.0, rel=1e-12)


@pytest.mark.parametrize("n", [5, 20, 50])
def test_operator_norm_matches_dense(n):
    m = WeightedPlanarMeasure(np.arange(n, dtype=float), np.zeros(n), np.ones(n))
    est = operator_norm_estimate(m, seed=n)
    assert est.value == pytest.approx(operator_norm_dense(m), rel=1e-6)
    c = cantor4(2)
    assert operator_norm_estimate(c).value == pytest.approx(operator_norm_dense(c), rel=1e-6)
