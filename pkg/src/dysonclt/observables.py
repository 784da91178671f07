"""Spectral statistics of a single matrix sample.

Everything here works on sorted eigenvalue arrays: power traces, rescaled
Chebyshev traces, the height function (scaled eigenvalue counting function)
and its centered moments, computed both by quadrature and through traces.
"""
import csv
import math
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, NumericalError


def eigenvalues(M):
    """Sorted real eigenvalues of a symmetric or Hermitian matrix."""
    M = np.asarray(M)
    try:
        w = np.linalg.eigvalsh(M)
    except np.linalg.LinAlgError as exc:
        try:
            cond = np.linalg.cond(M)
        except np.linalg.LinAlgError:
            cond = float("nan")
        raise NumericalError(
            f"eigensolver failed on {M.shape[0]}x{M.shape[0]} matrix "
            f"(norm {np.linalg.norm(M):.3e}, condition {cond:.3e})") from exc
    return w


def trace_power(eigs, k):
    """``sum_s lambda_s ** k``."""
    if k < 1:
        raise ConfigError("k must be >= 1")
    return float(np.sum(np.asarray(eigs, dtype=float) ** k))


def chebyshev_t(k, x):
    """``T_k(x)``: three-term recurrence on ``[-1, 1]``, ``cosh`` continuation outside."""
    x = np.asarray(x, dtype=float)
    inside = np.abs(x) <= 1.0
    xi = np.where(inside, x, 0.0)
    t_prev, t_cur = np.ones_like(xi), xi
    if k == 0:
        res = t_prev
    else:
        for _ in range(k - 1):
            t_prev, t_cur = t_cur, 2.0 * xi * t_cur - t_prev
        res = t_cur
    if np.all(inside):
        return res
    xo = np.where(inside, 2.0, np.abs(x))
    outer = np.cosh(k * np.arccosh(xo)) * np.where(x < 0, (-1.0) ** k, 1.0)
    return np.where(inside, res, outer)


def chebyshev_trace(eigs, k, b, L):
    """``sum_s T_k(lambda_s / (2 sqrt(b L)))``."""
    if k < 1 or not b > 0 or not L > 0:
        raise ConfigError("need k >= 1, b > 0, L > 0")
    x = np.asarray(eigs, dtype=float) / (2.0 * math.sqrt(b * L))
    return float(np.sum(chebyshev_t(k, x)))


def height_prefactor(beta):
    return math.sqrt(beta * math.pi / 2.0)


def height_function(eigs, x, beta):
    """``sqrt(beta pi / 2)`` times the number of eigenvalues ``>= x``."""
    eigs = np.sort(np.asarray(eigs, dtype=float))
    count = len(eigs) - np.searchsorted(eigs, x, side="left")
    return height_prefactor(beta) * count


@dataclass
class HeightMoments:
    values: np.ndarray
    x_grid: np.ndarray
    truncated: bool


def height_moment_empirical(spectra, k, y, L, beta=1, window=None, n_nodes=4096):
    """Per-sample ``int x^k (H(sqrt(L) x) - mean H(sqrt(L) x)) dx``.

    ``spectra`` holds eigenvalues of ``[L y] x [L y]`` matrices, one row per
    sample. The mean height over the ensemble stands in for the expectation.
    The integral is the trapezoid rule on ``n_nodes`` equispaced points of
    ``window`` (default ``[-2 sqrt(y) - 1, 2 sqrt(y) + 1]``).
    """
    spectra = np.atleast_2d(np.asarray(spectra, dtype=float))
    if window is None:
        half = 2.0 * math.sqrt(y) + 1.0
        window = (-half, half)
    lo, hi = window
    x = np.linspace(lo, hi, n_nodes)
    scaled = np.sort(spectra, axis=1) / math.sqrt(L)
    truncated = bool(scaled.min() < lo or scaled.max() > hi)
    if truncated:
        warnings.warn("eigenvalues fall outside the height-moment window", RuntimeWarning)
    n = scaled.shape[1]
    counts = n - np.stack([np.searchsorted(row, x, side="left") for row in scaled])
    heights = height_prefactor(beta) * counts
    centered = heights - heights.mean(axis=0)
    vals = np.trapezoid(x ** k * centered, x, axis=1)
    return HeightMoments(vals, x, truncated)


def height_moment_via_traces(eigs, mean_trace, k, L, beta):
    """``L^{-(k+1)/2} sqrt(beta pi / 2) / (k + 1) * (tr X^{k+1} - mean_trace)``."""
    tr = trace_power(eigs, k + 1)
    return L ** (-(k + 1) / 2) * height_prefactor(beta) / (k + 1) * (tr - mean_trace)


def write_spectra_csv(path, spectra, metadata=None):
    """One row per sample: ``sample_id, lambda_1, ..., lambda_n``."""
    spectra = [np.asarray(s, dtype=float) for s in spectra]
    width = max(len(s) for s in spectra)
    with open(path, "w", newline="") as fh:
        if metadata:
            fh.write("# " + " ".join(f"{k}={v}" for k, v in metadata.items()) + "\n")
        w = csv.writer(fh)
        w.writerow(["sample_id"] + [f"lambda_{i + 1}" for i in range(width)])
        for i, s in enumerate(spectra):
            w.writerow([i] + [repr(float(v)) for v in s])


def height_moment_scale(eigs, k, L, beta):
    """Magnitude of the uncentered moment, ``L^{-(k+1)/2} sqrt(beta pi/2)/(k+1) sum |lambda|^{k+1}``.

    The natural yardstick for quadrature error in ``height_moment_empirical``:
    a centered moment can vanish while the integrand it is built from does not.
    """
    s = float(np.sum(np.abs(np.asarray(eigs, dtype=float)) ** (k + 1)))
    return L ** (-(k + 1) / 2) * height_prefactor(beta) / (k + 1) * s
