import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import minimize
from scipy.special import logsumexp

from growthnet import DomainError, RateFamily, build_model, ell_M, ell_S_class, ell_sum
from growthnet.exact import log_poisson_pmf, pmf_M_plus_S
from growthnet.ratefns import (NEG_INF_SLOPE, ell_sum_split, lambda_M, lambda_S_class,
                               log_falling_factorial, solve_theta)

MIXED = RateFamily(0.4, ((0.3, 0.5), (0.2, 0.8)))


def test_lambda_M_values():
    assert lambda_M(0.0, 3.0) == 0.0
    assert lambda_M(math.log(2), 1.0) == pytest.approx(-0.5, abs=1e-15)
    assert lambda_M(200.0, 1.0) == pytest.approx(-1.0)
    with pytest.raises(DomainError):
        lambda_M(-0.1, 1.0)


def test_lambda_S_values():
    assert lambda_S_class(0.0, 1.0, 0.5) == 0.0
    assert lambda_S_class(math.log(2), 1.0, 0.5) == pytest.approx(-math.log(1.5), abs=1e-15)
    assert lambda_S_class(1.3, 0.0, 0.7) == 0.0
    for bad in (0.0, 1.0, 1.5):
        with pytest.raises(DomainError):
            lambda_S_class(1.0, 1.0, bad)


def test_ell_M_values():
    assert ell_M(1.0, 1.0) == 0.0
    assert ell_M(0.5, 1.0) == pytest.approx(0.5 + 0.5 * math.log(0.5), abs=1e-15)
    assert ell_M(0.5, 1.0) == pytest.approx(0.153426, abs=1e-6)
    assert ell_M(0.0, 1.0) == 1.0
    assert ell_M(3.0, 0.0) == 0.0
    assert ell_M(2.0, 1.0) == 0.0


def test_ell_S_values():
    assert ell_S_class(1.0, 1.0, 0.5) == 0.0
    assert ell_S_class(0.0, 1.0, 0.5) == pytest.approx(math.log(2), abs=1e-15)
    assert ell_S_class(5.0, 1.0, 0.5) == 0.0
    with pytest.raises(DomainError):
        ell_S_class(0.1, 0.0, 0.5)


def test_solve_theta_closed_forms():
    assert solve_theta(RateFamily(1.0), 0.5) == pytest.approx(math.log(2), abs=1e-12)
    geo = RateFamily(0.0, ((1.0, 0.5),))
    assert solve_theta(geo, 0.5) == pytest.approx(math.log(1.5), abs=1e-12)
    assert solve_theta(MIXED, MIXED.mean * (1 - 1e-9)) < 1e-6
    for bad in (0.0, MIXED.mean, -1.0, 10.0):
        with pytest.raises(DomainError):
            solve_theta(MIXED, bad)


def test_family_mean():
    assert MIXED.mean == pytest.approx(0.4 + 0.3 + 0.2 * 4)
    assert MIXED.lam(0.0) == 0.0


def test_ell_sum_endpoints_and_closed_forms():
    assert ell_sum(MIXED, MIXED.mean) == (0.0, 0.0)
    assert ell_sum(MIXED, 5.0) == (0.0, 0.0)
    v, d = ell_sum(MIXED, 0.0)
    assert d == NEG_INF_SLOPE
    assert v == pytest.approx(0.4 - 0.3 * math.log(0.5) - 0.2 * math.log(0.2))
    # the x -> 0 limit is approached continuously
    assert ell_sum(MIXED, 1e-7)[0] == pytest.approx(v, abs=1e-4)

    v, d = ell_sum(RateFamily(1.0), 0.5)
    assert v == pytest.approx(ell_M(0.5, 1.0), abs=1e-12)
    assert d == pytest.approx(-math.log(2), abs=1e-12)
    v, d = ell_sum(RateFamily(0.0, ((1.0, 0.5),)), 0.5)
    assert v == pytest.approx(ell_S_class(0.5, 1.0, 0.5), abs=1e-12)
    assert d == pytest.approx(-math.log(1.5), abs=1e-12)


def test_log_falling_factorial():
    assert log_falling_factorial(5, 2) == pytest.approx(math.log(20))
    assert log_falling_factorial(9, 0) == 0.0
    assert log_falling_factorial(12, 12) == pytest.approx(math.log(math.factorial(12)))
    with pytest.raises(DomainError):
        log_falling_factorial(3, 4)
    arr = log_falling_factorial(np.array([5, 6]), 2)
    assert np.allclose(arr, np.log([20, 30]))


def ell_derivative_max_rel_error(family, xs, h=1e-5):
    worst = 0.0
    for x in xs:
        fd = (ell_sum(family, x + h)[0] - ell_sum(family, x - h)[0]) / (2 * h)
        d = ell_sum(family, x)[1]
        worst = max(worst, abs(fd - d) / abs(d))
    return worst


def test_derivative_matches_central_differences():
    xs = np.linspace(0.05, MIXED.mean - 0.05, 25)
    assert ell_derivative_max_rel_error(MIXED, xs) < 1e-6


def test_convex_and_decreasing():
    xs = np.linspace(0.01, MIXED.mean - 0.01, 200)
    v = np.array([ell_sum(MIXED, x)[0] for x in xs])
    assert np.all(np.diff(v) < 0)
    assert np.all(np.diff(v, 2) >= -1e-8)


def best_grid_split_one_class(kbar1, fbar, varrho, x, n=200_001):
    """min over y of ell_M(y) + ell_S(x - y), dense grid then local polish."""
    ys = np.linspace(0.0, x, n)
    vals = np.array([ell_M(y, kbar1) + ell_S_class(x - y, fbar, varrho) for y in ys])
    return float(vals.min())


def test_decomposition_one_class_grid():
    family = RateFamily(0.5, ((0.5, 0.6),))
    for x in (0.2, 0.6, 1.0):
        assert ell_sum(family, x)[0] == pytest.approx(
            best_grid_split_one_class(0.5, 0.5, 0.6, x), abs=1e-8)


def split_value(family, x, parts):
    y = x - sum(parts)
    if y < 0 or min(parts) < 0:
        return math.inf
    return ell_M(y, family.kbar1) + sum(
        ell_S_class(p, f, r) for p, (f, r) in zip(parts, family.class_terms))


def test_decomposition_two_classes_grid():
    x = 0.9
    grid = np.linspace(0.0, x, 301)
    best = min((split_value(MIXED, x, [a, b]), a, b) for a in grid for b in grid if a + b <= x)
    res = minimize(lambda p: split_value(MIXED, x, list(p)), [best[1], best[2]],
                   method="Nelder-Mead", options={"xatol": 1e-12, "fatol": 1e-15,
                                                  "maxiter": 20000})
    assert ell_sum(MIXED, x)[0] == pytest.approx(res.fun, abs=1e-8)
    pool, parts = ell_sum_split(MIXED, x)
    assert pool + sum(parts) == pytest.approx(x, abs=1e-12)
    assert split_value(MIXED, x, parts) == pytest.approx(ell_sum(MIXED, x)[0], abs=1e-12)


@settings(max_examples=60, deadline=None)
@given(kbar1=st.floats(0.0, 2.0), fbar=st.floats(0.01, 2.0), varrho=st.floats(0.05, 0.95),
       frac=st.floats(0.02, 0.98), split=st.floats(0.0, 1.0))
def test_decomposition_upper_bound_property(kbar1, fbar, varrho, frac, split):
    family = RateFamily(kbar1, ((fbar, varrho),))
    x = frac * family.mean
    y = split * min(x, kbar1)
    value = ell_sum(family, x)[0]
    assert value >= -1e-12
    assert value <= ell_M(y, kbar1) + ell_S_class(x - y, fbar, varrho) + 1e-10


@settings(max_examples=60, deadline=None)
@given(kbar1=st.floats(0.05, 2.0), fbar=st.floats(0.01, 2.0), varrho=st.floats(0.05, 0.95),
       frac=st.floats(0.02, 0.98))
def test_theta_solves_first_order_condition(kbar1, fbar, varrho, frac):
    family = RateFamily(kbar1, ((fbar, varrho),))
    x = frac * family.mean
    theta = solve_theta(family, x)
    assert theta > 0
    assert abs(x + family.dlam(theta)) < 1e-10 * max(1.0, x)


def cramer_gap(m, kbar1=1.0, x=0.5):
    log_cdf = float(logsumexp(log_poisson_pmf(kbar1 * m, int(x * m))))
    return abs(-log_cdf / m - ell_M(x, kbar1))


def test_cramer_gap_shrinks():
    gaps = [cramer_gap(m) for m in (200, 400, 800)]
    assert gaps[0] > gaps[1] > gaps[2]


def local_limit_ratio_error(m=2000, nbar=0.6):
    # kbar1 = 0.5 plus a class with fbar = 0.5, varrho = 0.5: mean 1.0
    model = build_model(m, [(0.5 * m, 1), (m, m // 2)])
    family = RateFamily(0.5, ((0.5, 0.5),))
    n = int(nbar * m)
    pmf = pmf_M_plus_S(model, upto=n)
    ratio = math.exp(pmf.log_p[n - 1] - pmf.log_p[n])
    return abs(ratio - math.exp(ell_sum(family, nbar)[1]))


def test_local_limit_ratio():
    assert local_limit_ratio_error() < 0.01


def falling_factorial_ratio(n=10**6, k=1000, i=1000):
    return math.exp(log_falling_factorial(n + k + i, k) - log_falling_factorial(n + k, k))


def test_falling_factorial_ratio():
    assert abs(falling_factorial_ratio() - math.e) < 1e-2
