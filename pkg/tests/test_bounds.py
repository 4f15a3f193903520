import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from banditlab.bounds import (
    bernoulli_fourth_moment, emp_bernstein_radius, emp_bernstein_radius_onesided,
    emp_bernstein_radius_twosided, emp_bernstein_simplified, emp_variance_upper_bound,
    fourth_moment_bound, hoeffding_radius, maurer_pontil_radius,
)
from banditlab.bounds import _maurer_pontil

mp.mp.dps = 40


def eb_oracle(ell, V):
    ell, V = mp.mpf(ell), mp.mpf(V)
    tight = mp.sqrt(2 * ell * (V + ell)) + ell * (mp.mpf(1) / 3 + mp.sqrt(1 - 3 * V))
    return float(min(tight, mp.sqrt(ell / 2)))


def test_hoeffding_examples():
    assert hoeffding_radius(1, math.exp(-2)) == pytest.approx(1.0)
    assert hoeffding_radius(50, math.exp(-1)) == pytest.approx(0.1)
    assert hoeffding_radius(40, 0.1) == pytest.approx(2 * hoeffding_radius(160, 0.1))
    assert hoeffding_radius(0, 0.1) == math.inf


def test_eb_calculator_example():
    # t = n = 100 with log(3/eps) = 1 gives ell = 0.01
    ell = 100 * 1.0 / 100**2
    assert emp_bernstein_radius(ell, 0.25) == pytest.approx(0.0707107, abs=1e-6)
    tight = math.sqrt(2 * ell * 0.26) + ell * (1 / 3 + math.sqrt(0.25))
    assert tight == pytest.approx(0.08044, abs=1e-5)


def test_eb_vanishes():
    assert emp_bernstein_radius(1e-14, 0.0) < 1e-6


@given(st.integers(1, 1000), st.integers(0, 1000), st.floats(1e-6, 0.99), st.floats(0, 0.25))
def test_eb_matches_oracle(t, extra, eps, V):
    n = t + extra
    ell1 = n * math.log(2 / eps) / t**2
    ell2 = n * math.log(3 / eps) / t**2
    assert emp_bernstein_radius_onesided(t, n, eps, V) == pytest.approx(eb_oracle(ell1, V), rel=1e-12)
    assert emp_bernstein_radius_twosided(t, n, eps, V) == pytest.approx(eb_oracle(ell2, V), rel=1e-12)


def test_tight_below_simplified_fuzz():
    r = np.random.default_rng(1)
    t = r.integers(1, 2000, 10**4)
    n = t + r.integers(0, 2000, 10**4)
    eps = r.uniform(1e-6, 0.999, 10**4)
    V = r.uniform(0, 0.25, 10**4)
    assert np.all(emp_bernstein_radius_twosided(t, n, eps, V) <= emp_bernstein_simplified(t, n, eps, V) + 1e-15)


@given(st.integers(2, 500), st.floats(1e-4, 0.5), st.floats(0, 0.25))
def test_monotonicity(t, eps, V):
    n = 1000
    r = emp_bernstein_radius_twosided(t, n, eps, V)
    assert emp_bernstein_radius_twosided(t - 1, n, eps, V) > r
    assert emp_bernstein_radius_twosided(t, n + 1, eps, V) > r
    assert emp_bernstein_radius_twosided(t, n, eps / 2, V) > r


def test_variance_domain():
    with pytest.raises(ValueError):
        emp_bernstein_radius(0.1, 0.3)
    # ulp overshoot is clamped
    assert emp_bernstein_radius(0.1, 0.25 + 1e-12) == emp_bernstein_radius(0.1, 0.25)
    with pytest.raises(ValueError):
        emp_bernstein_radius_twosided(5, 4, 0.1, 0.1)
    with pytest.raises(ValueError):
        hoeffding_radius(3, 1.0)


def test_variance_upper_bound_example():
    # V = 0 and t = n: the bound is (sqrt(ell) + sqrt(ell / 2))^2 with ell = log(3/eps) / n
    n, eps = 50, 0.05
    ell = math.log(3 / eps) / n
    assert emp_variance_upper_bound(n, n, eps, 0.0) == pytest.approx((math.sqrt(ell) + math.sqrt(ell / 2)) ** 2)
    V = 0.1
    ell = 200 * math.log(3 / eps) / 200**2
    expect = (math.sqrt(V + ell) + math.sqrt(ell / 2 * (1 - 3 * V))) ** 2
    assert emp_variance_upper_bound(200, 200, eps, V) == pytest.approx(expect)


@given(st.integers(1, 500), st.floats(1e-4, 0.9), st.floats(0, 0.25))
def test_variance_upper_bound_dominates(t, eps, V):
    assert emp_variance_upper_bound(t, 500, eps, V) >= V


def test_variance_upper_bound_coverage():
    r = np.random.default_rng(2)
    x = r.random((10**5, 200)) < 0.5
    V = x.var(axis=1)
    b = emp_variance_upper_bound(200, 200, 0.05, V)
    assert np.mean(0.25 > b) <= 0.05


def test_maurer_pontil():
    # log(3/eps) = 1
    assert _maurer_pontil(101, 1.0, 0.0) == pytest.approx(0.02328, abs=1e-5)
    with pytest.raises(ValueError):
        maurer_pontil_radius(1, 0.1, 0.0)
    # near-zero variance: smaller than the uniform-in-time radius at t = n
    assert maurer_pontil_radius(100, 0.05, 0.0) < emp_bernstein_radius_twosided(100, 100, 0.05, 0.0)


def test_maurer_pontil_leading_term():
    t, eps, V = 10**8, 0.05, 0.2
    L = math.log(3 / eps)
    assert maurer_pontil_radius(t, eps, V) == pytest.approx(math.sqrt(2 * V * L / t), rel=1e-3)


@pytest.mark.parametrize("p", [0.01, 0.1, 0.5, 0.9])
def test_fourth_moment_equality(p):
    exact = float(mp.mpf(1 - p) * mp.mpf(p) ** 4 + mp.mpf(p) * mp.mpf(1 - p) ** 4)
    assert abs(fourth_moment_bound(p * (1 - p)) - exact) <= 1e-12
    assert abs(bernoulli_fourth_moment(p) - exact) <= 1e-12


def test_fourth_moment_examples():
    assert fourth_moment_bound(0.0) == 0
    assert fourth_moment_bound(0.25) == pytest.approx(0.0625)
    assert fourth_moment_bound(0.09) == pytest.approx(0.0657)


@given(st.lists(st.floats(0, 1), min_size=2, max_size=6), st.data())
def test_fourth_moment_is_an_upper_bound(vals, data):
    w = np.array(data.draw(st.lists(st.floats(0.01, 1), min_size=len(vals), max_size=len(vals))))
    w /= w.sum()
    x = np.array(vals)
    mu = w @ x
    V = w @ (x - mu) ** 2
    assert w @ (x - mu) ** 4 <= fourth_moment_bound(min(V, 0.25)) + 1e-12
