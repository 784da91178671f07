"""Scalar stochastic processes that populate the matrix entries.

Off-diagonal entries ``Z_ij(t)`` and diagonal entries ``Y_i(t)`` are i.i.d.
mean-zero processes. For the real symmetric case (beta = 1) their law is tied
to a covariance function ``c(s, t)`` through

    E Z(s) Z(t) = c(s, t),   E Y(s) Y(t) = 2 c(s, t),
    E Z(s)^2 Z(t)^2 = 2 c(s, t)^2 + 1,

and for the Hermitian case (beta = 2) through

    E Z(s) Z(t) = 0,   E Z(s) conj(Z(t)) = d(s, t),   E Y(s) Y(t) = d(s, t),
    E |Z(s)|^2 |Z(t)|^2 = d(s, t)^2 + 1.

The Gaussian family realizes these with stationary Gaussian processes whose
grid covariance is factored once; for the exponential kernel this is the
stationary Ornstein-Uhlenbeck process (Dyson Brownian motion for the matrix).
"""
from dataclasses import dataclass, field

import numpy as np

from .errors import AdmissibilityError, ConfigError, OutOfRangeError

JITTER = 1e-12
PSD_TOL = 1e-10


@dataclass(frozen=True)
class OrnsteinUhlenbeck:
    rate: float = 1.0

    def __post_init__(self):
        if not self.rate > 0:
            raise ConfigError(f"OU rate must be positive, got {self.rate}")

    def evaluate(self, s, t):
        return np.exp(-self.rate * np.abs(np.subtract(s, t)))

    def is_multiplicative(self):
        return True

    def to_dict(self):
        return {"kind": "ou", "rate": self.rate}


@dataclass(frozen=True)
class Constant:
    """``c(s, t) = value`` for ``s != t`` and 1 on the diagonal."""

    value: float = 1.0

    def __post_init__(self):
        if not 0 < self.value <= 1:
            raise ConfigError(f"constant covariance must lie in (0, 1], got {self.value}")

    def evaluate(self, s, t):
        s, t = np.broadcast_arrays(np.asarray(s, dtype=float), np.asarray(t, dtype=float))
        out = np.where(s == t, 1.0, self.value)
        return out[()] if out.ndim == 0 else out

    def is_multiplicative(self):
        return self.value == 1.0

    def to_dict(self):
        return {"kind": "constant", "value": self.value}


@dataclass(frozen=True)
class TableInterpolated:
    """Bilinear interpolation of a tabulated ``c`` on a rectangular grid.

    The table is read through ``(min(s, t), max(s, t))`` so the result is
    exactly symmetric; the diagonal is pinned to 1 and values are clamped to
    ``[0, 1]``.
    """

    grid: tuple
    values: tuple = field(repr=False)

    def __post_init__(self):
        g = np.asarray(self.grid, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if g.ndim != 1 or len(g) < 2 or np.any(np.diff(g) <= 0):
            raise ConfigError("table grid must be strictly increasing with >= 2 nodes")
        if v.shape != (len(g), len(g)):
            raise ConfigError(f"table values must have shape {(len(g), len(g))}, got {v.shape}")
        object.__setattr__(self, "grid", tuple(g.tolist()))
        object.__setattr__(self, "values", tuple(map(tuple, v.tolist())))

    def evaluate(self, s, t):
        g = np.asarray(self.grid)
        v = np.asarray(self.values)
        s, t = np.broadcast_arrays(np.asarray(s, dtype=float), np.asarray(t, dtype=float))
        if np.any((s < g[0]) | (s > g[-1]) | (t < g[0]) | (t > g[-1])):
            raise OutOfRangeError(f"table covariance queried outside [{g[0]}, {g[-1]}]")
        lo, hi = np.minimum(s, t), np.maximum(s, t)
        i = np.clip(np.searchsorted(g, lo, side="right") - 1, 0, len(g) - 2)
        j = np.clip(np.searchsorted(g, hi, side="right") - 1, 0, len(g) - 2)
        fx = (lo - g[i]) / (g[i + 1] - g[i])
        fy = (hi - g[j]) / (g[j + 1] - g[j])
        val = ((1 - fx) * (1 - fy) * v[i, j] + fx * (1 - fy) * v[i + 1, j]
               + (1 - fx) * fy * v[i, j + 1] + fx * fy * v[i + 1, j + 1])
        out = np.where(lo == hi, 1.0, np.clip(val, 0.0, 1.0))
        return out[()] if out.ndim == 0 else out

    def is_multiplicative(self):
        return False

    def to_dict(self):
        return {"kind": "table", "grid": list(self.grid), "values": [list(r) for r in self.values]}


def covariance_from_dict(d):
    kind = d.get("kind")
    if kind == "ou":
        return OrnsteinUhlenbeck(float(d.get("rate", 1.0)))
    if kind == "constant":
        return Constant(float(d.get("value", 1.0)))
    if kind == "table":
        return TableInterpolated(tuple(d["grid"]), tuple(map(tuple, d["values"])))
    raise ConfigError(f"unknown covariance kind {kind!r}")


def covariance_eval(c, s, t):
    """Value of the covariance function ``c`` at the time pair ``(s, t)``."""
    return float(c.evaluate(s, t))


FAMILIES = ("gaussian", "threepoint", "static_iid")
STATIC_DISTRIBUTIONS = ("gaussian", "threepoint")


@dataclass(frozen=True)
class EntryProcessSpec:
    """Law of the entry processes.

    family
        ``"gaussian"``: stationary Gaussian processes with the given
        covariance. ``"threepoint"``: one draw from ``{-sqrt3, 0, sqrt3}``
        with probabilities ``{1/6, 2/3, 1/6}`` frozen in time (requires
        ``Constant(1)``). ``"static_iid"``: a time-frozen draw from
        ``distribution`` (``"gaussian"`` or ``"threepoint"``).
    """

    beta: int = 1
    covariance: object = field(default_factory=OrnsteinUhlenbeck)
    family: str = "gaussian"
    distribution: str = None

    def __post_init__(self):
        if self.beta not in (1, 2):
            raise ConfigError(f"beta must be 1 or 2, got {self.beta}")
        if self.family not in FAMILIES:
            raise ConfigError(f"unknown family {self.family!r}")
        if self.family == "static_iid" and self.distribution not in STATIC_DISTRIBUTIONS:
            raise ConfigError(f"static_iid needs distribution in {STATIC_DISTRIBUTIONS}")
        if self.family != "gaussian":
            cov = self.covariance
            if not (isinstance(cov, Constant) and cov.value == 1.0):
                raise ConfigError(f"family {self.family!r} is frozen in time and requires Constant(1)")

    @property
    def kernel_family(self):
        """Integer code understood by the assembly kernels."""
        if self.family == "gaussian":
            return 0
        if self.family == "static_iid" and self.distribution == "gaussian":
            return 1
        return 2

    def to_dict(self):
        d = {"beta": self.beta, "family": self.family, "covariance": self.covariance.to_dict()}
        if self.distribution is not None:
            d["distribution"] = self.distribution
        return d

    @classmethod
    def from_dict(cls, d):
        return cls(
            beta=int(d.get("beta", 1)),
            covariance=covariance_from_dict(d.get("covariance", {"kind": "ou", "rate": 1.0})),
            family=d.get("family", "gaussian"),
            distribution=d.get("distribution"),
        )


def check_grid(grid):
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or len(grid) == 0:
        raise ConfigError("time grid must be a nonempty 1-d array")
    if np.any(np.diff(grid) <= 0):
        raise ConfigError("time grid must be strictly increasing")
    if not np.all(np.isfinite(grid)):
        raise ConfigError("time grid must be finite")
    return grid


def grid_covariance(c, grid):
    grid = np.asarray(grid, dtype=float)
    return np.asarray(c.evaluate(grid[:, None], grid[None, :]), dtype=float)


def _semidefinite_cholesky(m, tol):
    n = m.shape[0]
    low = np.zeros_like(m)
    for j in range(n):
        piv = m[j, j] - low[j, :j] @ low[j, :j]
        if piv < -tol:
            raise AdmissibilityError(
                f"grid covariance is not positive semidefinite (pivot {piv:.3e} at node {j})")
        if piv <= tol:
            continue
        low[j, j] = np.sqrt(piv)
        low[j + 1:, j] = (m[j + 1:, j] - low[j + 1:, :j] @ low[j, :j]) / low[j, j]
    return low


def lower_factor(m):
    """Lower-triangular ``F`` with ``F F^T = m`` for a PSD matrix ``m``.

    Tries a plain Cholesky, then with ``1e-12`` diagonal jitter, then a
    pivot-dropping semidefinite Cholesky for rank-deficient matrices such as
    the all-ones covariance of a time-frozen process.
    """
    m = np.asarray(m, dtype=float)
    try:
        return np.linalg.cholesky(m)
    except np.linalg.LinAlgError:
        pass
    try:
        return np.linalg.cholesky(m + JITTER * np.eye(len(m)))
    except np.linalg.LinAlgError:
        pass
    return _semidefinite_cholesky(m, PSD_TOL * max(1.0, np.abs(m).max()))


def path_factors(spec, grid):
    """Grid factors ``(offdiag, diag)`` used by the assembly kernels.

    For beta = 2 the off-diagonal factor is for each of the real and
    imaginary parts separately (covariance ``d / 2``).
    """
    grid = check_grid(grid)
    cov = grid_covariance(spec.covariance, grid)
    if spec.beta == 1:
        return lower_factor(cov), lower_factor(2.0 * cov)
    return lower_factor(0.5 * cov), lower_factor(cov)


def _three_point(u):
    return np.where(u < 1.0 / 6.0, -np.sqrt(3.0), np.where(u < 5.0 / 6.0, 0.0, np.sqrt(3.0)))


def _static_draw(spec, rng, size):
    if spec.distribution == "gaussian":
        return rng.standard_normal(size)
    return _three_point(rng.random(size))


def sample_offdiagonal_path(spec, grid, rng, size=None):
    """Sample ``Z(t)`` on ``grid``.

    Returns shape ``(len(grid),)``, or ``(size, len(grid))`` when ``size`` is
    given; complex for beta = 2.
    """
    grid = check_grid(grid)
    g = len(grid)
    shape = (1 if size is None else size,)
    if spec.family == "gaussian":
        f_off, _ = path_factors(spec, grid)
        if spec.beta == 1:
            out = rng.standard_normal(shape + (g,)) @ f_off.T
        else:
            re = rng.standard_normal(shape + (g,)) @ f_off.T
            im = rng.standard_normal(shape + (g,)) @ f_off.T
            out = re + 1j * im
    else:
        if spec.beta == 1:
            v = _static_draw(spec, rng, shape)
        else:
            v = (_static_draw(spec, rng, shape) + 1j * _static_draw(spec, rng, shape)) * np.sqrt(0.5)
        out = np.repeat(v[:, None], g, axis=1)
    return out[0] if size is None else out


def sample_diagonal_path(spec, grid, rng, size=None):
    """Sample ``Y(t)`` on ``grid`` (always real)."""
    grid = check_grid(grid)
    g = len(grid)
    shape = (1 if size is None else size,)
    if spec.family == "gaussian":
        _, f_diag = path_factors(spec, grid)
        out = rng.standard_normal(shape + (g,)) @ f_diag.T
    else:
        v = _static_draw(spec, rng, shape)
        if spec.beta == 1:
            v = v * np.sqrt(2.0)
        out = np.repeat(v[:, None], g, axis=1)
    return out[0] if size is None else out


@dataclass
class MomentCheck:
    name: str
    s: float
    t: float
    estimate: float
    stderr: float
    target: float

    @property
    def z(self):
        if self.stderr == 0:
            return 0.0 if self.estimate == self.target else np.inf
        return (self.estimate - self.target) / self.stderr


@dataclass
class AdmissibilityReport:
    beta: int
    n_samples: int
    checks: list

    def max_abs_z(self):
        return max(abs(c.z) for c in self.checks)

    def passed(self, z_max=4.0):
        return self.max_abs_z() <= z_max

    def find(self, name, s, t):
        for c in self.checks:
            if c.name == name and c.s == s and c.t == t:
                return c
        raise KeyError((name, s, t))


def _moment(name, s, t, values, target):
    values = np.asarray(values, dtype=float)
    se = values.std(ddof=1) / np.sqrt(len(values))
    return MomentCheck(name, float(s), float(t), float(values.mean()), float(se), float(target))


def check_admissibility(spec, grid, n_samples, rng):
    """Empirical check of the second and fourth moment conditions.

    For every grid pair ``s <= t`` estimates the relevant moments from
    ``n_samples`` independent paths and reports them next to their targets.
    """
    if n_samples < 1000:
        raise ConfigError("check_admissibility needs n_samples >= 1000")
    grid = check_grid(grid)
    z = sample_offdiagonal_path(spec, grid, rng, size=n_samples)
    y = sample_diagonal_path(spec, grid, rng, size=n_samples)
    cov = grid_covariance(spec.covariance, grid)
    checks = []
    for a in range(len(grid)):
        for b in range(a, len(grid)):
            s, t, c = grid[a], grid[b], cov[a, b]
            if spec.beta == 1:
                checks.append(_moment("ZZ", s, t, z[:, a] * z[:, b], c))
                checks.append(_moment("Z2Z2", s, t, z[:, a] ** 2 * z[:, b] ** 2, 2 * c * c + 1))
                checks.append(_moment("YY", s, t, y[:, a] * y[:, b], 2 * c))
            else:
                zz = z[:, a] * z[:, b]
                zzbar = z[:, a] * np.conj(z[:, b])
                checks.append(_moment("ZZ_re", s, t, zz.real, 0.0))
                checks.append(_moment("ZZ_im", s, t, zz.imag, 0.0))
                checks.append(_moment("ZZbar_re", s, t, zzbar.real, c))
                checks.append(_moment("ZZbar_im", s, t, zzbar.imag, 0.0))
                checks.append(_moment("absZ2absZ2", s, t,
                                      np.abs(z[:, a]) ** 2 * np.abs(z[:, b]) ** 2, c * c + 1))
                checks.append(_moment("YY", s, t, y[:, a] * y[:, b], c))
    return AdmissibilityReport(spec.beta, n_samples, checks)
