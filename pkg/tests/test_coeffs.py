import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from l2phase.coeffs import (
    build_coeff_table,
    coeff_abc,
    coeff_abc_naive,
    coeff_d,
    coeff_d_from_abc,
    coeff_integral_check,
    coeff_r1,
    kappa,
)
from l2phase.experiments import coefficient_properties

# [DERIVED] 50-digit mpmath quadrature of the integral forms of a_j and c_j,
# b_j = -a_j - c_j, and d_j from the kappa closed form.
MP_REFERENCE = [
    # alpha, j, a, b, c, d
    (0.5, 1, -0.60355339059327376, 0.58578643762690495, 0.017766952966368811, 1.0177669529663688),
    (0.5, 2, -0.46872884728971084, 0.46070182678574831, 0.0080270205039625262, 0.61158041109723629),
    (0.3, 10, -0.58643301975465427, 0.58503267304994425, 0.0014003467047100185, 0.60557572370346885),
    (0.3, 10000, -0.075082610085475166, 0.075082422387865479, 1.8769760968702539e-7, 0.075085050276407985),
    (0.9, 10000, -2.76293002306183e-5, 2.7629093019672898e-5, 2.0721094540224605e-10, 2.7631994169768495e-5),
    (0.1, 777, -0.87886348152390529, 0.87885406166346926, 9.4198604360313453e-6, 0.87898600640650964),
]

alphas = st.floats(min_value=0.01, max_value=0.99)


def test_abc_alpha_half_j1():
    a, b, c = coeff_abc(0.5, 1)
    assert a == pytest.approx(-0.603553, abs=1e-6)
    assert b == pytest.approx(0.585786, abs=1e-6)
    assert c == pytest.approx(0.017767, abs=1e-6)
    assert b == pytest.approx(-a - c, abs=1e-15)


@pytest.mark.parametrize("alpha,j,a,b,c,d", MP_REFERENCE)
def test_against_high_precision_reference(alpha, j, a, b, c, d):
    got = coeff_abc(alpha, j)
    for x, ref in zip(got, (a, b, c)):
        assert x == pytest.approx(ref, rel=1e-12)
    assert coeff_d(alpha, j) == pytest.approx(d, rel=1e-12)
    assert coeff_d_from_abc(alpha, j) == pytest.approx(d, rel=1e-12)


def test_c_tiny_at_large_j_keeps_relative_accuracy():
    # c_j ~ 2e-10 here; the literal power form loses most digits of it
    c = coeff_abc(0.9, 10000)[2]
    assert c == pytest.approx(2.0721094540224605e-10, rel=1e-10)
    naive = coeff_abc_naive(0.9, 10000)[2]
    assert abs(naive - c) / c > 1e-8


def test_r1_alpha_half():
    assert coeff_r1(0.5) == pytest.approx(0.48223304703363119, rel=1e-14)


@given(alphas)
def test_r1_plus_d1_is_two_minus_alpha(alpha):
    assert coeff_r1(alpha) + coeff_d(alpha, 1) == pytest.approx(2 - alpha, abs=1e-14)


@given(alphas, st.integers(min_value=1, max_value=10**6))
def test_abc_sum_vanishes(alpha, j):
    a, b, c = coeff_abc(alpha, j)
    assert abs(a + b + c) <= 1e-12


@settings(max_examples=50)
@given(alphas, st.integers(min_value=1, max_value=5000))
def test_integral_forms_match_closed_forms(alpha, j):
    a, _, c = coeff_abc(alpha, j)
    qa, qc = coeff_integral_check(alpha, j, quad_points=64)
    assert qa == pytest.approx(a, rel=1e-8)
    assert qc == pytest.approx(c, rel=1e-8)
    assert qa < 0


@settings(max_examples=50)
@given(alphas, st.integers(min_value=1, max_value=50))
def test_series_and_literal_agree_to_literal_roundoff(alpha, j):
    # the literal form cancels terms of size j**(2-alpha), so compare absolutely
    stable = coeff_abc(alpha, j)
    naive = coeff_abc_naive(alpha, j)
    for x, y in zip(stable, naive):
        assert abs(x - y) <= 1e-11


def test_kappa_small_and_series_branches():
    j = np.arange(2, 12)
    for beta in (1.9, 0.7, -0.3, -1.5):
        direct = (j + 1.0) ** beta - 2 * j**beta + (j - 1.0) ** beta
        assert np.allclose(kappa(j, beta), direct, rtol=1e-11, atol=0)


def test_kappa_rejects_singular_first_index():
    with pytest.raises(ValueError):
        kappa(1, -0.5)
    assert kappa(1, 0.5) == pytest.approx(2**0.5 - 2)


@pytest.mark.parametrize("bad", [0.0, 1.0, -0.1, 1.5, math.nan])
def test_alpha_domain(bad):
    with pytest.raises(ValueError):
        coeff_abc(bad, 1)


def test_index_domain():
    with pytest.raises(ValueError):
        coeff_abc(0.5, 0)
    with pytest.raises(ValueError):
        coeff_d(0.5, 1.5)


def test_integral_check_needs_enough_points():
    with pytest.raises(ValueError):
        coeff_integral_check(0.5, 3, quad_points=8)


def test_table_layout_and_bounds():
    t = build_coeff_table(0.4, 20)
    assert np.isnan(t.a[0]) and t.a.size == 21
    assert t.d[7] == pytest.approx(coeff_d(0.4, 7), rel=1e-15)
    assert t.r1 == coeff_r1(0.4)
    with pytest.raises(ValueError):
        t.a[3] = 0.0
    t.require(20)
    with pytest.raises(ValueError):
        t.require(21)
    with pytest.raises(ValueError):
        build_coeff_table(0.4, 0)


def test_vectorized_matches_scalar():
    j = np.array([1, 2, 3, 4, 5, 100, 4000])
    a, b, c = coeff_abc(0.7, j)
    for k, jj in enumerate(j):
        sa, sb, sc = coeff_abc(0.7, int(jj))
        assert (a[k], b[k], c[k]) == pytest.approx((sa, sb, sc), rel=1e-15)


@pytest.mark.parametrize("alpha", [0.1, 0.5, 0.9])
def test_coefficient_properties_short_range(alpha):
    props = coefficient_properties(alpha, 500)
    assert all(props.values()), [k for k, v in props.items() if not v]


def test_b_positive_c_positive_d_decreasing_examples():
    t = build_coeff_table(0.5, 10)
    assert np.all(t.b[1:] > 0) and np.all(t.c[1:] > 0)
    assert np.all(np.diff(t.d[1:]) < 0)
    assert np.all(4 * t.d[2:] >= t.d[1:-1])
