import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dysonclt.errors import ConfigError
from dysonclt.observables import (
    chebyshev_t, chebyshev_trace, eigenvalues, height_function, height_moment_empirical,
    height_moment_scale, height_moment_via_traces, trace_power, write_spectra_csv)

SQ = math.sqrt(math.pi / 2)


def _sym(n, seed):
    a = np.random.default_rng(seed).standard_normal((n, n))
    return (a + a.T) / 2


def test_eigenvalue_examples():
    assert eigenvalues(np.diag([3.0, -1.0, 2.0])).tolist() == [-1, 2, 3]
    np.testing.assert_allclose(eigenvalues(np.array([[0.0, 1.0], [1.0, 0.0]])), [-1, 1])


@settings(max_examples=25, deadline=None)
@given(st.integers(2, 12), st.integers(0, 10**6))
def test_trace_identities(n, seed):
    m = _sym(n, seed)
    e = eigenvalues(m)
    assert np.all(np.diff(e) >= 0)
    assert trace_power(e, 1) == pytest.approx(np.trace(m), abs=1e-10)
    assert trace_power(e, 2) == pytest.approx(np.sum(m * m), rel=1e-8, abs=1e-10)
    assert trace_power(e, 3) == pytest.approx(np.trace(m @ m @ m), rel=1e-8, abs=1e-10)


def test_trace_power_examples():
    assert trace_power([-1, 1], 2) == 2
    assert trace_power([-1, 2, 3], 1) == 4
    with pytest.raises(ConfigError):
        trace_power([1.0], 0)


@given(st.lists(st.floats(-1, 1), min_size=1, max_size=30), st.integers(0, 20))
def test_chebyshev_recurrence_matches_cosine(xs, k):
    x = np.array(xs)
    np.testing.assert_allclose(chebyshev_t(k, x), np.cos(k * np.arccos(x)), atol=1e-12)


def test_chebyshev_outside_interval():
    x = np.array([-3.0, -1.5, 1.2, 4.0])
    for k in range(6):
        want = np.polynomial.chebyshev.chebval(x, [0] * k + [1])
        np.testing.assert_allclose(chebyshev_t(k, x), want, rtol=1e-12)


def test_chebyshev_trace_examples():
    e = np.random.default_rng(0).standard_normal(50) * 10
    b, L = 0.5, 100
    assert chebyshev_trace(e, 1, b, L) == pytest.approx(trace_power(e, 1) / (2 * math.sqrt(b * L)), rel=1e-14)
    assert chebyshev_trace([0.0], 2, 3.0, 7.0) == -1.0
    with pytest.raises(ConfigError):
        chebyshev_trace(e, 1, 0.0, L)


def test_height_function_examples():
    assert height_function([-1, 0, 2], 1, 1) == pytest.approx(1.2533, abs=1e-4)
    assert height_function([-1, 0, 2], -5, 2) == pytest.approx(math.sqrt(math.pi) * 3)
    assert height_function([-1, 0, 2], 5, 1) == 0
    assert height_function([-1, 0, 2], 0, 1) == 2 * SQ


@given(st.lists(st.floats(-10, 10), min_size=1, max_size=20))
def test_height_monotone_steps(eigs):
    xs = np.linspace(-11, 11, 301)
    h = np.array([height_function(eigs, x, 1) for x in xs])
    assert np.all(np.diff(h) <= 0)
    steps = np.round(h / SQ, 9)
    assert np.all(steps == np.round(steps))


def test_height_moment_single_sample_is_zero():
    vals = height_moment_empirical(np.array([[-1.0, 0.3, 1.2]]), 2, 1.0, 1.0).values
    assert np.all(vals == 0)


def test_height_moment_mirror_antisymmetry():
    lam = np.array([-1.2, 0.1, 0.7, 1.5])
    res = height_moment_empirical(np.stack([lam, -lam[::-1]]), 2, 1.0, 1.0)
    assert abs(res.values.sum()) < 1e-3


def test_height_moment_identity_k0_and_k1():
    L = 40
    spectra = np.stack([eigenvalues(_sym(L, s) * math.sqrt(2)) for s in range(20)])
    for k in (0, 1):
        emp = height_moment_empirical(spectra, k, 1.0, L, n_nodes=4096)
        mean_tr = np.mean(np.sum(spectra ** (k + 1), axis=1))
        for i in range(len(spectra)):
            via = height_moment_via_traces(spectra[i], mean_tr, k, L, 1)
            assert abs(emp.values[i] - via) <= 1e-3 * height_moment_scale(spectra[i], k, L, 1)


def test_height_moment_truncation_warning():
    with pytest.warns(RuntimeWarning):
        res = height_moment_empirical(np.array([[-9.0, 9.0], [0.0, 0.1]]), 1, 1.0, 1.0)
    assert res.truncated


def test_via_traces_examples():
    assert height_moment_via_traces([1.0, -1.0], 2.0, 1, 1.0, 1) == 0
    assert height_moment_via_traces([1.0, -1.0], 0.0, 1, 1.0, 1) == pytest.approx(SQ, abs=1e-12)


def test_spectra_csv(tmp_path):
    p = tmp_path / "s.csv"
    write_spectra_csv(p, [[1.0, 2.0], [3.0, 4.0]], {"seed": 1, "L": 2})
    lines = p.read_text().splitlines()
    assert lines[0].startswith("#") and lines[1].startswith("sample_id,lambda_1")
    assert lines[2] == "0,1.0,2.0"
