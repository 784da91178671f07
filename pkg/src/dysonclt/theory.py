"""Limiting covariance of normalized centered traces of Wigner submatrices.

For observables ``L^{-k/2} (tr X_B^k(t) - E tr X_B^k(t))`` the limit
covariance depends on the degrees ``k_p, k_q``, the size ratios
``b_p = |B_p|/L``, ``b_q``, the overlap ``b_pq = |B_p & B_q|/L``, the entry
correlation ``c = c(t_p, t_q)`` and ``beta``. Three evaluators are provided
and must agree:

* ``covariance_series``: finite binomial sum over cycle lengths ``r``;
* ``covariance_contour``: double contour integral over nested circles,
  discretized with the trapezoid rule;
* ``covariance_logkernel``: double integral of a logarithmic kernel over
  upper semicircles, discretized with Gauss-Legendre.

Chebyshev traces ``tr T_k(X_B / (2 sqrt(b L)))`` decorrelate; their
covariance has a closed form, cross-checked by expanding ``T_k`` into
monomials.
"""
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from itertools import product

import mpmath
import numpy as np
from scipy.special import spence

from .errors import ConfigError, OutOfRangeError, SingularConfigurationError

CATALAN_MAX = 64
CONVOLUTION_MAX_S = 32


@dataclass(frozen=True)
class CovarianceQuery:
    k_p: int
    k_q: int
    b_p: float
    b_q: float
    b_pq: float
    c: float
    beta: int = 1

    def __post_init__(self):
        if self.k_p < 1 or self.k_q < 1:
            raise ConfigError("degrees must be >= 1")
        if not (self.b_p > 0 and self.b_q > 0):
            raise ConfigError("b_p and b_q must be positive")
        if self.b_pq < 0 or self.b_pq > min(self.b_p, self.b_q) * (1 + 1e-12):
            raise ConfigError(
                f"b_pq={self.b_pq} must lie in [0, min(b_p, b_q)={min(self.b_p, self.b_q)}]")
        if not 0 <= self.c <= 1:
            raise ConfigError(f"c={self.c} must lie in [0, 1]")
        if self.beta not in (1, 2):
            raise ConfigError("beta must be 1 or 2")

    def swapped(self):
        return CovarianceQuery(self.k_q, self.k_p, self.b_q, self.b_p, self.b_pq, self.c, self.beta)


@dataclass(frozen=True)
class QuadratureParams:
    """Discretization controls.

    n_nodes
        Minimum trapezoid nodes per circle for the contour integral; raised
        automatically (powers of two) until the aliasing error bound falls
        below ``aliasing_tol``.
    radius_shrink
        Relative shrink of the inner circle ``|z| = sqrt(b_p) (1 - delta)``.
    logkernel_nodes
        Gauss-Legendre nodes per semicircle for the log-kernel integral.
    """

    n_nodes: int = 512
    radius_shrink: float = 1e-3
    logkernel_nodes: int = 1024
    aliasing_tol: float = 1e-18
    max_nodes: int = 1 << 20

    def __post_init__(self):
        if self.n_nodes < 64:
            raise ConfigError("n_nodes must be >= 64")
        if not 0 < self.radius_shrink < 0.5:
            raise ConfigError("radius_shrink must lie in (0, 0.5)")
        if self.logkernel_nodes < 16:
            raise ConfigError("logkernel_nodes must be >= 16")


DEFAULT_QUADRATURE = QuadratureParams()


# ---------------------------------------------------------------- combinatorics

def catalan(n):
    """The ``n``-th Catalan number (exact)."""
    if n < 0 or int(n) != n:
        raise OutOfRangeError(f"Catalan index must be a nonnegative integer, got {n}")
    if n > CATALAN_MAX:
        raise OutOfRangeError(f"Catalan index {n} exceeds {CATALAN_MAX}")
    n = int(n)
    return math.comb(2 * n, n) // (n + 1)


def catalan_or_zero(a):
    """``C_a`` with the convention ``C_a = 0`` unless ``a`` is a nonnegative integer."""
    if isinstance(a, Fraction):
        if a.denominator != 1:
            return 0
        a = a.numerator
    elif isinstance(a, float):
        if not a.is_integer():
            return 0
        a = int(a)
    if a < 0:
        return 0
    return catalan(a)


def catalan_convolution(r, S):
    """``sum over s_1 + ... + s_r = S of prod C_{s_i}``, via its closed form.

    Equals ``binom(2S + r, S) * r / (2S + r)``.
    """
    if r < 1:
        raise OutOfRangeError("r must be >= 1")
    if S < 0 or S > CONVOLUTION_MAX_S:
        raise OutOfRangeError(f"S must lie in [0, {CONVOLUTION_MAX_S}]")
    num = math.comb(2 * S + r, S) * r
    q, rem = divmod(num, 2 * S + r)
    assert rem == 0, "closed form is not an integer"
    return q


def catalan_convolution_bruteforce(r, S):
    """Enumerates all weak compositions of ``S`` into ``r`` parts."""
    cat = [catalan(i) for i in range(S + 1)]

    @lru_cache(maxsize=None)
    def count(parts, total):
        if parts == 0:
            return 1 if total == 0 else 0
        return sum(cat[s] * count(parts - 1, total - s) for s in range(total + 1))

    # recursion walks every composition once; the cache only shares suffixes
    return count(r, S)


def _binom_half(k, r):
    """``binom(k, (k - r) / 2)``, zero unless ``(k - r) / 2`` is an integer in ``[0, k]``."""
    if r > k or (k - r) % 2:
        return 0
    return math.comb(k, (k - r) // 2)


def series_terms(k_p, k_q):
    """Integer weights ``w_r = r binom(k_p, (k_p-r)/2) binom(k_q, (k_q-r)/2)``."""
    out = []
    for r in range(1, min(k_p, k_q) + 1):
        w = r * _binom_half(k_p, r) * _binom_half(k_q, r)
        if w:
            out.append((r, w))
    return out


def _series(k_p, k_q, b_p, b_q, b_pq, c, beta, sqrt=math.sqrt):
    # generic arithmetic so that Fraction / mpf inputs stay exact / high precision
    total = 0
    for r, w in series_terms(k_p, k_q):
        hp, hq = (k_p - r) // 2, (k_q - r) // 2
        total += w * (c * b_pq) ** r * b_p ** hp * b_q ** hq
    return 2 * total / beta


def covariance_series(q):
    """Finite binomial series for the limiting covariance.

    ``(2/beta) sum_r r binom(k_p,(k_p-r)/2) binom(k_q,(k_q-r)/2)
    (c b_pq)^r b_p^{(k_p-r)/2} b_q^{(k_q-r)/2}``.
    """
    return float(_series(q.k_p, q.k_q, q.b_p, q.b_q, q.b_pq, q.c, q.beta))


def covariance_series_exact(k_p, k_q, b_p=1, b_q=1, b_pq=1, c=1, beta=1):
    """Same series in rational arithmetic."""
    return Fraction(_series(k_p, k_q, Fraction(b_p), Fraction(b_q), Fraction(b_pq),
                            Fraction(c), beta))


def variance_catalan_form(k):
    """Single-set static real variance in its Catalan-number form.

    ``2k^2 C^2_{(k-1)/2} + k^2 C^2_{k/2} + sum_{r>=3} (2k^2/r) (sum prod C)^2``
    where the inner sum runs over ``r`` parts with ``2 sum k_i = k - r``.
    """
    k = int(k)
    total = 2 * k * k * catalan_or_zero(Fraction(k - 1, 2)) ** 2
    total += k * k * catalan_or_zero(Fraction(k, 2)) ** 2
    total = Fraction(total)
    for r in range(3, k + 1):
        if (k - r) % 2:
            continue
        inner = catalan_convolution(r, (k - r) // 2)
        total += Fraction(2 * k * k, r) * inner ** 2
    return total


# ---------------------------------------------------------------- contour integral

def covariance_contour(q, quad=DEFAULT_QUADRATURE):
    """Double contour integral over ``|z| = sqrt(b_p)(1 - delta) < |w| = sqrt(b_q)``.

    Integrand ``(z + b_p/z)^{k_p} (w + b_q/w)^{k_q} a / (a z - w)^2`` with
    ``a = c b_pq / b_p``, prefactor ``(2/beta) (2 pi i)^{-2}``. Both circles
    use the same equispaced angles, so the kernel only depends on the index
    difference and the double trapezoid sum is a circular correlation done
    with FFTs. The node count grows until the trapezoid aliasing bound
    ``N q^N`` (``q = a r_z / r_w``) is below ``quad.aliasing_tol``.
    """
    a = q.c * q.b_pq / q.b_p
    if a == 0.0:
        return 0.0
    rz = math.sqrt(q.b_p) * (1.0 - quad.radius_shrink)
    rw = math.sqrt(q.b_q)
    gap = rw - a * rz
    if gap < 1e-6:
        raise SingularConfigurationError(
            f"pole a*z lies within {gap:.2e} of the outer contour; increase radius_shrink")
    ratio = a * rz / rw
    n = max(quad.n_nodes, 2 * (q.k_p + q.k_q) + 8)
    n = 1 << (n - 1).bit_length()
    while n * ratio ** n > quad.aliasing_tol:
        n *= 2
        if n > quad.max_nodes:
            raise SingularConfigurationError(
                f"contour ratio {ratio:.6f} needs more than {quad.max_nodes} nodes")
    roots = np.exp(2j * np.pi * np.arange(n) / n)
    z = rz * roots
    w = rw * roots
    u = (z + q.b_p / z) ** q.k_p * z
    v = (w + q.b_q / w) ** q.k_q * w * roots ** -2
    # a z_j - w_l = roots^l (a rz roots^{j-l} - rw)
    kern = a / (a * rz * roots - rw) ** 2
    # s_l = sum_d kern_d u_{l+d}
    s = np.fft.ifft(np.fft.fft(u) * np.fft.fft(kern[(-np.arange(n)) % n]))
    val = 2.0 / q.beta * np.sum(v * s) / n ** 2
    if abs(val.imag) > 1e-9 * (1.0 + abs(val.real)):
        raise SingularConfigurationError(
            f"contour integral has imaginary part {val.imag:.3e} (real {val.real:.6e})")
    return float(val.real)


# ---------------------------------------------------------------- log kernel

def _li2(x):
    return spence(1.0 - x)


class _LogKernel:
    """``ln|a - rho e^{i psi}|`` with its antiderivative in ``psi``.

    With ``M = max(a, rho)`` and ``q = min(a, rho)/M``:
    ``ln|a - rho e^{i psi}| = ln M + ln|1 - q e^{i psi}|`` and
    ``d/dpsi [-Im Li2(q e^{i psi})] = ln|1 - q e^{i psi}|``.
    """

    def __init__(self, a, rho):
        self.m = max(a, rho)
        self.q = min(a, rho) / self.m
        self.log_m = math.log(self.m)

    def value(self, psi):
        with np.errstate(divide="ignore"):
            return self.log_m + np.log(np.abs(1.0 - self.q * np.exp(1j * psi)))

    def antiderivative(self, psi):
        return psi * self.log_m - np.imag(_li2(self.q * np.exp(1j * psi)))


@lru_cache(maxsize=8)
def _gauss_legendre_pair(n):
    # the two angular grids use n and n + 1 nodes so no node pair coincides
    x1, w1 = np.polynomial.legendre.leggauss(n)
    x2, w2 = np.polynomial.legendre.leggauss(n + 1)
    half = math.pi / 2
    return (x1 + 1) * half, w1 * half, (x2 + 1) * half, w2 * half


def logkernel_block(k_max, b_p, b_q, b_pq, c, beta, quad=DEFAULT_QUADRATURE):
    """All log-kernel covariances for degrees ``1..k_max`` at one geometry.

    Returns a ``(k_max, k_max)`` array. Parametrize ``z = sqrt(b_p) e^{i th}``,
    ``w = sqrt(b_q) e^{i ph}`` with ``th, ph`` in ``(0, pi)``; then
    ``x(z) = 2 sqrt(b_p) cos th`` and ``dx = -2 sqrt(b_p) sin th dth``, and

        ln|(a - z w) / (a - z conj(w))| = l(th + ph) - l(th - ph),
        l(psi) = ln|a - sqrt(b_p b_q) e^{i psi}|,   a = c b_pq.

    ``l(th - ph)`` is log-singular on the diagonal when ``a = sqrt(b_p b_q)``
    and ``l(th + ph)`` at the corners. Both are handled by subtracting the
    inner density at the singular point and integrating ``l`` exactly through
    its dilogarithm antiderivative, leaving an integrand that vanishes on the
    singular set.
    """
    if c * b_pq == 0.0:
        return np.zeros((k_max, k_max))
    th, wth, ph, wph = _gauss_legendre_pair(quad.logkernel_nodes)
    lk = _LogKernel(c * b_pq, math.sqrt(b_p * b_q))
    sp, sq = math.sqrt(b_p), math.sqrt(b_q)
    ks = np.arange(1, k_max + 1)[:, None]

    def density(t, s, kk):
        return (2 * s * np.cos(t)) ** (kk - 1) * (-2 * s * np.sin(t))

    f = density(th[None, :], sp, ks) * wth          # (k_max, n)
    g_ph = density(ph[None, :], sq, ks)            # (k_max, n+1)
    g_th = density(th[None, :], sq, ks)            # g evaluated on the theta grid

    T, P = th[:, None], ph[None, :]
    l_minus = lk.value(T - P)
    l_plus = lk.value(T + P)
    l_minus[~np.isfinite(l_minus)] = 0.0
    l_plus[~np.isfinite(l_plus)] = 0.0

    # g is odd in its angle: subtract g(th) from the th-ph part and -g(th) = g(-th) from th+ph
    inner_minus = lk.antiderivative(th) - lk.antiderivative(th - math.pi)
    inner_plus = lk.antiderivative(th + math.pi) - lk.antiderivative(th)
    lm_w = l_minus * wph
    lp_w = l_plus * wph
    sum_lm = lm_w.sum(axis=1)
    sum_lp = lp_w.sum(axis=1)
    # sum_j [g(ph_j) - g(th_i)] l(th_i - ph_j) w_j, vectorized over degrees
    part_minus = g_ph @ lm_w.T - g_th * sum_lm[None, :] + g_th * inner_minus[None, :]
    part_plus = g_ph @ lp_w.T + g_th * sum_lp[None, :] - g_th * inner_plus[None, :]
    inner = part_plus - part_minus                  # (k_max_q, n) over theta
    block = f @ inner.T / (2 * math.pi)             # (k_max_p, k_max_q)
    kk = ks * ks.T
    out = 2.0 * kk / (beta * math.pi) * block
    parity = (ks + ks.T) % 2 == 1
    out[parity] = 0.0
    return out


def covariance_logkernel(q, quad=DEFAULT_QUADRATURE):
    """Log-kernel double integral over upper semicircles ``|z|^2 = b_p``, ``|w|^2 = b_q``.

    ``(2 k_p k_q / (beta pi)) (1/2 pi) iint x(z)^{k_p-1} x(w)^{k_q-1}
    ln|(c b_pq - z w) / (c b_pq - z conj(w))| dx(z) dx(w)``.
    """
    if (q.k_p + q.k_q) % 2:
        return 0.0
    k_max = max(q.k_p, q.k_q)
    block = logkernel_block(k_max, q.b_p, q.b_q, q.b_pq, q.c, q.beta, quad)
    val = block[q.k_p - 1, q.k_q - 1]
    if not np.isfinite(val):
        raise SingularConfigurationError("non-finite log-kernel integral")
    return float(val)


# ---------------------------------------------------------------- Chebyshev

def chebyshev_coefficients(k):
    """Integer monomial coefficients ``[a_0, ..., a_k]`` of ``T_k``."""
    if k < 0:
        raise OutOfRangeError("degree must be >= 0")
    t_prev, t_cur = [1], [0, 1]
    if k == 0:
        return t_prev
    for _ in range(k - 1):
        nxt = [0] + [2 * a for a in t_cur]
        for i, a in enumerate(t_prev):
            nxt[i] -= a
        t_prev, t_cur = t_cur, nxt
    return t_cur


def chebyshev_covariance_closed(k_p, k_q, b_p, b_q, b_pq, c, beta):
    """``delta_{k_p k_q} (k_p / (2 beta)) (c b_pq / sqrt(b_p b_q))^{k_p}``."""
    if k_p < 1 or k_q < 1:
        raise ConfigError("degrees must be >= 1")
    if k_p != k_q:
        return 0.0
    return k_p / (2.0 * beta) * (c * b_pq / math.sqrt(b_p * b_q)) ** k_p


def chebyshev_covariance_expanded(k_p, k_q, b_p, b_q, b_pq, c, beta, dps=60):
    """Chebyshev covariance by bilinear expansion over monomial covariances.

    ``T_k(x / (2 sqrt(b L))) = sum_j a_j (2 sqrt b)^{-j} L^{-j/2} x^j``; the
    constant term drops under centering and the remaining pairs are weighted
    by ``covariance_series(j, l)``. Evaluated in ``dps``-digit arithmetic
    because the terms cancel heavily.
    """
    if k_p > 32 or k_q > 32:
        raise OutOfRangeError("degrees above 32 are not supported")
    ap, aq = chebyshev_coefficients(k_p), chebyshev_coefficients(k_q)
    with mpmath.workdps(dps):
        bp, bq, bpq, cc = (mpmath.mpf(v) for v in (b_p, b_q, b_pq, c))
        sp, sq = 2 * mpmath.sqrt(bp), 2 * mpmath.sqrt(bq)
        total = mpmath.mpf(0)
        for j, l in product(range(1, k_p + 1), range(1, k_q + 1)):
            if ap[j] == 0 or aq[l] == 0 or (j + l) % 2:
                continue
            total += ap[j] * aq[l] * sp ** -j * sq ** -l * _series(j, l, bp, bq, bpq, cc, beta)
        return float(total)


# ---------------------------------------------------------------- observables

def monomial_expansion(statistic, k, b):
    """Coefficients ``{j: coef}`` of an observable in normalized power traces.

    A power trace ``L^{-k/2} tr X^k`` is ``{k: 1}``; a Chebyshev trace
    ``tr T_k(X / (2 sqrt(b L)))`` is ``sum_j a_j (2 sqrt b)^{-j}`` times
    ``L^{-j/2} tr X^j`` (the constant drops under centering).
    """
    if statistic == "power":
        return {k: 1.0}
    if statistic == "chebyshev":
        a = chebyshev_coefficients(k)
        return {j: a[j] * (2.0 * math.sqrt(b)) ** -j for j in range(1, k + 1) if a[j]}
    raise ConfigError(f"unknown statistic {statistic!r}")


def observable_covariance(stat_p, k_p, stat_q, k_q, b_p, b_q, b_pq, c, beta):
    """Limit covariance of two observables (power or Chebyshev traces)."""
    if stat_p == "chebyshev" and stat_q == "chebyshev":
        return chebyshev_covariance_closed(k_p, k_q, b_p, b_q, b_pq, c, beta)
    ep = monomial_expansion(stat_p, k_p, b_p)
    eq = monomial_expansion(stat_q, k_q, b_q)
    total = 0.0
    for j, cj in ep.items():
        for l, cl in eq.items():
            total += cj * cl * _series(j, l, b_p, b_q, b_pq, c, beta)
    return float(total)


EVALUATORS = {
    "series": lambda q, quad=None: covariance_series(q),
    "contour": lambda q, quad=DEFAULT_QUADRATURE: covariance_contour(q, quad or DEFAULT_QUADRATURE),
    "logkernel": lambda q, quad=DEFAULT_QUADRATURE: covariance_logkernel(q, quad or DEFAULT_QUADRATURE),
}


def agreement_grid():
    """Geometries of the evaluator-agreement sweep (before k and beta)."""
    cs = (0.0, 0.3, math.exp(-0.5), 1.0)
    bs = (0.5, 1.0, 2.0)
    out = []
    for b_p, b_q in product(bs, bs):
        for b_pq in sorted({0.0, 0.25, min(b_p, b_q)}):
            for c in cs:
                out.append((b_p, b_q, b_pq, c))
    return out


def agreement_sweep(k_max=8, quad=DEFAULT_QUADRATURE):
    """Compare all evaluators on the full grid.

    Returns a list of dicts with the query fields and the three values.
    """
    rows = []
    for b_p, b_q, b_pq, c in agreement_grid():
        for beta in (1, 2):
            block = logkernel_block(k_max, b_p, b_q, b_pq, c, beta, quad)
            for k_p, k_q in product(range(1, k_max + 1), repeat=2):
                q = CovarianceQuery(k_p, k_q, b_p, b_q, b_pq, c, beta)
                rows.append({
                    "k_p": k_p, "k_q": k_q, "b_p": b_p, "b_q": b_q, "b_pq": b_pq,
                    "c": c, "beta": beta,
                    "series": covariance_series(q),
                    "contour": covariance_contour(q, quad),
                    "logkernel": float(block[k_p - 1, k_q - 1]),
                })
    return rows
