import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dysonclt import _backend, _core_py, _rng
from dysonclt.entry_process import Constant, EntryProcessSpec, OrnsteinUhlenbeck, path_factors

BACKENDS = [_core_py] + ([_backend.compiled] if _backend.compiled is not None else [])
IDS = ["python", "cython"][:len(BACKENDS)]

seeds = st.integers(0, 2**64 - 1)
idx = st.integers(1, 10**6)


@pytest.mark.parametrize("mod", BACKENDS, ids=IDS)
@settings(max_examples=30, deadline=None)
@given(seed=seeds, i=idx, j=idx)
def test_uniforms_match_reference_bitwise(mod, seed, i, j):
    got = mod.uniforms(seed, np.array([i]), np.array([j]), 5)[0]
    want = [_rng.uniform(seed, i, j, m) for m in range(5)]
    assert got.tolist() == want


@pytest.mark.parametrize("mod", BACKENDS, ids=IDS)
@settings(max_examples=30, deadline=None)
@given(seed=seeds, i=idx, j=idx, count=st.integers(1, 7))
def test_normals_match_reference(mod, seed, i, j, count):
    got = mod.normals(seed, np.array([i]), np.array([j]), count)[0]
    np.testing.assert_allclose(got, _rng.normals(seed, i, j, count), rtol=1e-14, atol=1e-15)


def test_uniforms_lie_in_open_unit_interval():
    u = _backend.uniforms(7, np.arange(1, 2001), np.arange(1, 2001), 50)
    assert u.min() > 0 and u.max() < 1
    assert abs(u.mean() - 0.5) < 5 * np.sqrt(1 / 12 / u.size)


def test_sample_seeds_distinct():
    s = {_rng.sample_seed(42, i) for i in range(10_000)}
    assert len(s) == 10_000


@pytest.mark.parametrize("family", [0, 1, 2])
@pytest.mark.parametrize("beta", [1, 2])
def test_backends_agree_on_assembly(beta, family):
    if _backend.compiled is None:
        pytest.skip("compiled backend not built")
    cov = OrnsteinUhlenbeck(1.0) if family == 0 else Constant(1.0)
    spec = EntryProcessSpec(beta=beta, covariance=cov)
    f_off, f_diag = path_factors(spec, [0.0, 0.3, 1.0] if family == 0 else [0.0])
    labels = np.array([1, 2, 5, 9, 10], dtype=np.int64)
    fn = "assemble_real" if beta == 1 else "assemble_complex"
    a = getattr(_core_py, fn)(123, labels, family, f_off, f_diag)
    b = getattr(_backend.compiled, fn)(123, labels, family, f_off, f_diag)
    np.testing.assert_allclose(a, b, rtol=1e-13, atol=1e-14)
    for m in (a, b):
        assert np.array_equal(m, np.conj(np.swapaxes(m, 1, 2)))


def test_active_backend_name():
    assert _backend.NAME in ("cython", "python")
    assert (_backend.active is _backend.compiled) == (_backend.NAME == "cython")
