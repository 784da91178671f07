import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dysonclt.entry_process import Constant, EntryProcessSpec
from dysonclt.errors import CapacityError, ConfigError, DomainError
from dysonclt.wigner import IndexSet, overlap_fraction, sample_ensemble, submatrix

GOE = EntryProcessSpec(beta=1, covariance=Constant(1.0))
GUE = EntryProcessSpec(beta=2, covariance=Constant(1.0))


def test_index_set_parsing():
    assert IndexSet.from_config({"prefix": 3}) == IndexSet([1, 2, 3])
    assert IndexSet.from_config({"range": [4, 6]}) == IndexSet([6, 4, 5])
    assert IndexSet([3, 1]).elements.tolist() == [1, 3]
    for bad in ([], [0, 1], [1, 1], [1.5]):
        with pytest.raises(ConfigError):
            IndexSet(bad)


def test_overlap_fraction_examples():
    P = IndexSet.prefix
    assert overlap_fraction(P(200), P(100), 200) == (1, 0.5, 0.5)
    assert overlap_fraction(P(100), IndexSet.from_config({"range": [101, 200]}), 100) == (1, 1, 0)
    assert overlap_fraction(P(150), IndexSet.from_config({"range": [76, 225]}), 150) == (1, 1, 0.5)


def test_diagonal_variance_one_by_one():
    vals = np.array([sample_ensemble(1, GOE, [0.0], s).matrices[0, 0, 0] for s in range(100_000)])
    assert vals.var() == pytest.approx(2, abs=0.04)


def test_entry_sharing_across_submatrices():
    s = sample_ensemble(3, GOE, [0.0], 5)
    a = submatrix(s, [1, 2], 0)
    b = submatrix(s, [1, 2, 3], 0)
    assert a[0, 1] == b[0, 1]
    np.testing.assert_array_equal(submatrix(s, [1, 3], 0), b[np.ix_([0, 2], [0, 2])])


def test_labels_do_not_change_values():
    spec = EntryProcessSpec(beta=2)
    full = sample_ensemble(12, spec, [0.0, 0.4], 77)
    part = sample_ensemble(12, spec, [0.0, 0.4], 77, labels=[3, 7, 11])
    for t in range(2):
        np.testing.assert_array_equal(submatrix(full, [3, 7, 11], t), submatrix(part, [3, 7, 11], t))
    with pytest.raises(DomainError):
        submatrix(part, [1, 3], 0)


def test_determinism():
    a = sample_ensemble(8, EntryProcessSpec(beta=2), [0.0, 1.0], 99)
    b = sample_ensemble(8, EntryProcessSpec(beta=2), [0.0, 1.0], 99)
    assert np.array_equal(a.matrices, b.matrices)


def test_single_index_is_diagonal_value():
    s = sample_ensemble(4, EntryProcessSpec(), [0.0, 0.5], 1)
    for t in range(2):
        m = submatrix(s, [2], t)
        assert m.shape == (1, 1) and m[0, 0] == s.entry(2, 2)[t]


def test_hermitian_exact():
    s = sample_ensemble(30, GUE, [0.0], 4)
    m = submatrix(s, range(1, 31), 0)
    assert np.max(np.abs(m - m.conj().T)) == 0
    assert np.all(m.diagonal().imag == 0)


def test_errors():
    s = sample_ensemble(5, GOE, [0.0], 0)
    with pytest.raises(DomainError):
        submatrix(s, [6], 0)
    with pytest.raises(DomainError):
        submatrix(s, [1], 1)
    with pytest.raises(CapacityError):
        sample_ensemble(100, GOE, [0.0, 1.0], 0, max_values=1000)
    with pytest.raises(ConfigError):
        sample_ensemble(0, GOE, [0.0], 0)
    with pytest.raises(ConfigError):
        overlap_fraction([1], [1], 0)


@settings(max_examples=20, deadline=None)
@given(st.permutations(list(range(1, 13))), st.integers(0, 2**32))
def test_permuted_presentation_same_spectrum(perm, seed):
    s = sample_ensemble(12, GOE, [0.0], seed)
    B = perm[:7]
    m = s.matrices[0][np.ix_(np.array(B) - 1, np.array(B) - 1)]
    np.testing.assert_allclose(np.linalg.eigvalsh(m), np.linalg.eigvalsh(submatrix(s, B, 0)), atol=1e-10)


def test_trace_moments_scaling():
    n, reps = 200, 300
    tr1, tr2 = [], []
    for seed in range(reps):
        m = submatrix(sample_ensemble(n, GOE, [0.0], seed), range(1, n + 1), 0)
        tr1.append(np.trace(m))
        tr2.append(np.sum(m * m))
    tr1 = np.array(tr1)
    assert abs(tr1.mean()) <= 5 * tr1.std(ddof=1) / np.sqrt(reps)
    assert np.mean(tr2) / n ** 2 == pytest.approx(1, rel=0.05)
