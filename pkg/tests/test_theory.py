import math
from fractions import Fraction
from itertools import product

import pytest
from hypothesis import given, settings, strategies as st

from dysonclt import theory
from dysonclt.errors import ConfigError, OutOfRangeError, SingularConfigurationError
from dysonclt.theory import CovarianceQuery as Q

E5 = math.exp(-0.5)


def test_catalan():
    assert [theory.catalan(n) for n in (0, 3, 10)] == [1, 5, 16796]
    rec = [1]
    for n in range(20):
        rec.append(sum(rec[i] * rec[n - i] for i in range(n + 1)))
    assert [theory.catalan(n) for n in range(21)] == rec
    with pytest.raises(OutOfRangeError):
        theory.catalan(65)
    assert theory.catalan_or_zero(Fraction(3, 2)) == 0
    assert theory.catalan_or_zero(-1) == 0


def test_catalan_convolution_examples():
    assert theory.catalan_convolution(1, 2) == 2
    assert theory.catalan_convolution(2, 2) == 5
    assert theory.catalan_convolution(3, 0) == 1
    with pytest.raises(OutOfRangeError):
        theory.catalan_convolution(0, 1)
    with pytest.raises(OutOfRangeError):
        theory.catalan_convolution(1, 33)


@pytest.mark.parametrize("r,S", list(product(range(1, 9), range(0, 11))))
def test_convolution_closed_form_equals_bruteforce(r, S):
    assert theory.catalan_convolution(r, S) == theory.catalan_convolution_bruteforce(r, S)


def test_series_examples():
    assert theory.covariance_series(Q(1, 1, 1, 1, 1, 1, 1)) == 2
    assert theory.covariance_series(Q(1, 2, 0.7, 0.4, 0.3, 0.9, 1)) == 0
    assert theory.covariance_series(Q(2, 2, 1, 1, 1, 1, 1)) == 4
    assert theory.covariance_series(Q(2, 2, 1, 1, 1, 1, 2)) == 2
    assert theory.covariance_series(Q(3, 3, 1, 1, 1, 1, 1)) == 24
    assert theory.covariance_series(Q(1, 1, 1, 0.5, 0.5, E5, 1)) == pytest.approx(2 * E5 * 0.5, abs=1e-15)


@pytest.mark.parametrize("k", range(1, 13))
def test_variance_catalan_form_exact(k):
    assert theory.variance_catalan_form(k) == theory.covariance_series_exact(k, k)


def test_k2_direct_entrywise_count():
    # Cov(tr X^2, tr X^2) = 8 c^2 b_pq L + 4 c^2 b_pq^2 L^2 + O(L); normalized limit 4 c^2 b_pq^2
    c, bpq = 0.6, 0.4
    assert theory.covariance_series(Q(2, 2, 1, 0.5, bpq, c, 1)) == pytest.approx(4 * c * c * bpq * bpq)


def test_query_validation():
    with pytest.raises(ConfigError):
        Q(1, 1, 0.5, 0.5, 0.6, 1, 1)
    with pytest.raises(ConfigError):
        Q(0, 1, 1, 1, 1, 1, 1)
    with pytest.raises(ConfigError):
        Q(1, 1, 1, 1, 1, 1.1, 1)
    with pytest.raises(ConfigError):
        Q(1, 1, 1, 1, 1, 1, 3)


def test_contour_examples():
    assert theory.covariance_contour(Q(1, 1, 1, 1, 1, 1, 1)) == pytest.approx(2, abs=1e-9)
    q = Q(2, 2, 1, 4, 1, 0.5, 1)
    assert theory.covariance_contour(q) == pytest.approx(theory.covariance_series(q), abs=1e-9)
    assert abs(theory.covariance_contour(Q(2, 4, 1, 1, 1, 0, 1))) <= 1e-12


def test_contour_singular_configuration():
    tight = theory.QuadratureParams(radius_shrink=1e-9)
    with pytest.raises(SingularConfigurationError):
        theory.covariance_contour(Q(1, 1, 1, 1, 1, 1, 1), tight)


def test_logkernel_examples():
    assert theory.covariance_logkernel(Q(1, 1, 1, 1, 1, 1, 1)) == pytest.approx(2, abs=1e-6)
    q = Q(2, 2, 1, 2, 0.75, E5, 2)
    assert theory.covariance_logkernel(q) == pytest.approx(theory.covariance_series(q), abs=1e-6)
    assert theory.covariance_logkernel(Q(1, 2, 1, 1, 1, 1, 1)) == 0.0


def test_chebyshev_examples():
    assert theory.chebyshev_covariance_closed(1, 2, 1, 1, 1, 1, 1) == 0
    assert theory.chebyshev_covariance_closed(1, 1, 1, 1, 1, E5, 1) == pytest.approx(E5 / 2)
    assert theory.chebyshev_covariance_closed(1, 1, 1, 1, 1, E5, 1) == pytest.approx(
        theory.covariance_series(Q(1, 1, 1, 1, 1, E5, 1)) / 4)
    assert theory.chebyshev_covariance_closed(2, 2, 1, 1, 1, 1, 2) == 0.5
    bp, bq, bpq, c = 0.8, 0.5, 0.3, 0.7
    assert theory.chebyshev_covariance_expanded(1, 1, bp, bq, bpq, c, 1) == pytest.approx(
        c * bpq / (2 * math.sqrt(bp * bq)), rel=1e-14)
    assert theory.chebyshev_covariance_expanded(2, 2, 1, 1, 1, 1, 1) == pytest.approx(1, rel=1e-14)
    assert abs(theory.chebyshev_covariance_expanded(2, 4, 1, 1, 1, 1, 1)) < 1e-14


def test_chebyshev_coefficients():
    assert theory.chebyshev_coefficients(2) == [-1, 0, 2]
    assert theory.chebyshev_coefficients(3) == [0, -3, 0, 4]


geoms = st.tuples(st.floats(0.1, 2), st.floats(0.1, 2), st.floats(0, 1), st.floats(0, 1))


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 12), st.integers(1, 12), geoms, st.sampled_from([1, 2]))
def test_chebyshev_expanded_matches_closed(kp, kq, g, beta):
    bp, bq, frac, c = g
    bpq = frac * min(bp, bq)
    a = theory.chebyshev_covariance_closed(kp, kq, bp, bq, bpq, c, beta)
    b = theory.chebyshev_covariance_expanded(kp, kq, bp, bq, bpq, c, beta)
    assert b == pytest.approx(a, rel=1e-10, abs=1e-12)


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 8), st.integers(1, 8), geoms, st.sampled_from([1, 2]))
def test_evaluators_symmetric_under_swap(kp, kq, g, beta):
    bp, bq, frac, c = g
    q = Q(kp, kq, bp, bq, frac * min(bp, bq), c, beta)
    s = q.swapped()
    assert theory.covariance_series(q) == pytest.approx(theory.covariance_series(s), rel=1e-14)
    assert theory.covariance_contour(q) == pytest.approx(theory.covariance_contour(s), rel=1e-8, abs=1e-9)
    assert theory.covariance_logkernel(q) == pytest.approx(theory.covariance_logkernel(s), rel=1e-5, abs=1e-9)


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 10), geoms, st.floats(0, 1), st.floats(0, 1))
def test_series_monotone_in_c(k, g, c1, c2):
    bp, bq, frac, _ = g
    lo, hi = sorted((c1, c2))
    bpq = frac * min(bp, bq)
    assert theory.covariance_series(Q(k, k, bp, bq, bpq, lo, 1)) <= theory.covariance_series(Q(k, k, bp, bq, bpq, hi, 1))


def test_agreement_on_sub_grid():
    for b_p, b_q, b_pq, c in theory.agreement_grid()[::9]:
        for beta in (1, 2):
            block = theory.logkernel_block(8, b_p, b_q, b_pq, c, beta)
            for kp, kq in product(range(1, 9), repeat=2):
                q = Q(kp, kq, b_p, b_q, b_pq, c, beta)
                s = theory.covariance_series(q)
                assert abs(theory.covariance_contour(q) - s) <= 1e-8 * (1 + abs(s))
                assert abs(block[kp - 1, kq - 1] - s) <= 1e-5 * (1 + abs(s))


def test_observable_covariance_mixes_bases():
    b, c = 0.5, 0.8
    cheb = theory.observable_covariance("chebyshev", 3, "chebyshev", 3, b, b, b, c, 1)
    assert cheb == pytest.approx(theory.chebyshev_covariance_closed(3, 3, b, b, b, c, 1))
    mixed = theory.observable_covariance("power", 1, "chebyshev", 1, 1, b, b, c, 1)
    assert mixed == pytest.approx(theory.covariance_series(Q(1, 1, 1, b, b, c, 1)) / (2 * math.sqrt(b)))
    with pytest.raises(ConfigError):
        theory.monomial_expansion("legendre", 2, 1.0)
