"""Time-dependent Wigner matrices and their principal submatrices.

A sample stores the full symmetric (or Hermitian) matrix restricted to the
rows that some requested index set actually uses, at every node of the time
grid. Entry ``(i, j)`` is always generated from its own counter-based stream
keyed by ``(seed, i, j)``, so two samples that share a seed agree on every
common entry no matter which rows each of them materialized.
"""
from dataclasses import dataclass

import numpy as np

from . import _backend, _rng
from .entry_process import check_grid, path_factors
from .errors import CapacityError, ConfigError, DomainError

DEFAULT_MAX_VALUES = 50_000_000


class IndexSet:
    """A finite set of positive integers, stored sorted."""

    __slots__ = ("elements",)

    def __init__(self, elements):
        arr = np.asarray(list(elements) if not isinstance(elements, np.ndarray) else elements)
        if arr.size == 0:
            raise ConfigError("index set must be nonempty")
        if not np.issubdtype(arr.dtype, np.integer):
            if not np.all(arr == np.round(arr)):
                raise ConfigError("index set elements must be integers")
            arr = arr.astype(np.int64)
        arr = np.unique(arr.astype(np.int64))
        if len(arr) != np.asarray(elements).size:
            raise ConfigError("index set has duplicate elements")
        if arr[0] < 1:
            raise ConfigError("index set elements must be >= 1")
        self.elements = arr
        self.elements.setflags(write=False)

    @classmethod
    def prefix(cls, n):
        return cls(np.arange(1, int(n) + 1))

    @classmethod
    def from_config(cls, obj):
        """Accepts ``[1, 5, 7]``, ``{"prefix": n}`` or ``{"range": [a, b]}`` (inclusive)."""
        if isinstance(obj, dict):
            if "prefix" in obj:
                return cls.prefix(obj["prefix"])
            if "range" in obj:
                a, b = obj["range"]
                return cls(np.arange(int(a), int(b) + 1))
            raise ConfigError(f"cannot parse index set {obj!r}")
        return cls(obj)

    def __len__(self):
        return len(self.elements)

    def __iter__(self):
        return iter(self.elements.tolist())

    def __eq__(self, other):
        return isinstance(other, IndexSet) and np.array_equal(self.elements, other.elements)

    def __hash__(self):
        return hash(self.elements.tobytes())

    def __repr__(self):
        e = self.elements
        if len(e) > 1 and e[-1] - e[0] == len(e) - 1:
            return f"IndexSet({{{e[0]}..{e[-1]}}})"
        return f"IndexSet({e.tolist()})"

    @property
    def max(self):
        return int(self.elements[-1])


def as_index_set(B):
    return B if isinstance(B, IndexSet) else IndexSet(B)


@dataclass(frozen=True)
class EnsembleSample:
    """One realization of the entries needed for a family of submatrices.

    ``matrices[t]`` is the matrix ``[X(i, j | grid[t])]`` with rows and
    columns labelled by ``labels`` (ascending).
    """

    beta: int
    grid: np.ndarray
    labels: np.ndarray
    matrices: np.ndarray
    ambient_dim: int
    seed: int

    def positions(self, B):
        B = as_index_set(B)
        if B.max > self.ambient_dim:
            raise DomainError(f"index {B.max} exceeds ambient dimension {self.ambient_dim}")
        pos = np.searchsorted(self.labels, B.elements)
        pos = np.minimum(pos, len(self.labels) - 1)
        if not np.array_equal(self.labels[pos], B.elements):
            missing = np.setdiff1d(B.elements, self.labels)
            raise DomainError(f"rows {missing[:5].tolist()} were not materialized in this sample")
        return pos

    def entry(self, i, j):
        """Path of ``X(i, j | t)`` over the grid."""
        a, b = self.positions([i])[0], self.positions([j])[0]
        return self.matrices[:, a, b].copy()


def sample_ensemble(ambient_dim, spec, grid, seed, labels=None, max_values=DEFAULT_MAX_VALUES):
    """Draw all entries ``1 <= i <= j <= ambient_dim`` (or the rows in ``labels``).

    ``labels`` restricts storage to the union of the index sets an
    experiment needs; the values are identical to those of the full sample.
    """
    ambient_dim = int(ambient_dim)
    if ambient_dim < 1:
        raise ConfigError("ambient_dim must be >= 1")
    grid = check_grid(grid)
    if labels is None:
        labels = np.arange(1, ambient_dim + 1, dtype=np.int64)
    else:
        labels = as_index_set(labels).elements.copy()
        if labels[-1] > ambient_dim:
            raise DomainError(f"label {labels[-1]} exceeds ambient dimension {ambient_dim}")
    n = len(labels)
    if n * n * len(grid) > max_values:
        raise CapacityError(
            f"{n}x{n} matrices on {len(grid)} time nodes exceed the cap of {max_values} values")
    f_off, f_diag = path_factors(spec, grid)
    seed = int(seed) & _rng.MASK
    if spec.beta == 1:
        mats = _backend.active.assemble_real(seed, labels, spec.kernel_family, f_off, f_diag)
    else:
        mats = _backend.active.assemble_complex(seed, labels, spec.kernel_family, f_off, f_diag)
    mats.setflags(write=False)
    return EnsembleSample(spec.beta, grid, labels, mats, ambient_dim, seed)


def submatrix(sample, B, time_index):
    """The ``|B| x |B|`` matrix ``X_B(t)`` with rows ordered by sorted ``B``."""
    if not 0 <= time_index < len(sample.grid):
        raise DomainError(f"time index {time_index} out of range")
    pos = sample.positions(B)
    if pos[-1] - pos[0] == len(pos) - 1:
        sl = slice(int(pos[0]), int(pos[-1]) + 1)
        return sample.matrices[time_index, sl, sl]
    return sample.matrices[time_index][np.ix_(pos, pos)]


def overlap_fraction(Bp, Bq, L):
    """``(|Bp| / L, |Bq| / L, |Bp & Bq| / L)``."""
    if not L > 0:
        raise ConfigError("L must be positive")
    Bp, Bq = as_index_set(Bp), as_index_set(Bq)
    inter = len(np.intersect1d(Bp.elements, Bq.elements, assume_unique=True))
    return len(Bp) / L, len(Bq) / L, inter / L
