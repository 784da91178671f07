"""Covariance kernel of the limiting three-dimensional Gaussian field.

Points are ``(z, s)`` with ``z`` in the upper half-plane and ``s`` a time.
The kernel is

    C(z, s; w, t) = (1/2pi) ln| (c m - z w) / (c m - z conj(w)) |,
    m = min(|z|^2, |w|^2),  c = c(s, t),

which reduces to the Dirichlet Green function of the half-plane when
``c = 1``. ``omega`` identifies the semicircle domain ``|x| < 2 sqrt(y)``
with the half-plane, and ``xi`` does the same for a monotone section
``t -> (phi(t), psi(t))`` of (size, time) space.
"""
import math
from dataclasses import dataclass

import numpy as np

from .entry_process import covariance_eval
from .errors import BijectivityError, ConfigError, DomainError, NumericalError

INV_2PI = 1.0 / (2.0 * math.pi)


def _log_ratio(num, den):
    num, den = np.abs(num), np.abs(den)
    with np.errstate(divide="ignore"):
        return np.log(num) - np.log(den)


def kernel_value(z, w, c):
    """``C`` at a given correlation value ``c`` (vectorized in ``z``, ``w``, ``c``).

    Uses the two-branch form: for ``|z| <= |w|``
    ``-(1/2pi) ln|(c z - w) / (c z - conj w)|``, else the same with ``z``
    and ``w`` exchanged. Returns ``+inf`` at ``z = w`` when ``c = 1``.
    """
    z, w, c = np.broadcast_arrays(np.asarray(z, dtype=complex), np.asarray(w, dtype=complex),
                                  np.asarray(c, dtype=float))
    az, aw = np.abs(z), np.abs(w)
    # ties broken lexicographically so that C(z, w) == C(w, z) bit for bit
    inner = (az < aw) | ((az == aw) & ((z.real < w.real) | ((z.real == w.real) & (z.imag <= w.imag))))
    small = np.where(inner, z, w)
    big = np.where(inner, w, z)
    out = -INV_2PI * _log_ratio(c * small - big, c * small - np.conj(big))
    return out[()] if out.ndim == 0 else out


def kernel_C(z, s, w, t, cov):
    """``C(z, s; w, t)`` for the covariance function ``cov``."""
    c = cov.evaluate(s, t)
    return kernel_value(z, w, c)


def green_halfplane(z, w):
    """``-(1/2pi) ln|(z - w) / (z - conj w)|``."""
    z, w = np.asarray(z, dtype=complex), np.asarray(w, dtype=complex)
    out = -INV_2PI * _log_ratio(z - w, z - np.conj(w))
    return out[()] if np.ndim(out) == 0 else out


def omega(x, y):
    """``(x, y) -> x/2 + i sqrt(y - x^2/4)`` on the open domain ``|x| < 2 sqrt(y)``."""
    x, y = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
    if np.any(y <= 0) or np.any(np.abs(x) >= 2 * np.sqrt(np.maximum(y, 0))):
        raise DomainError("omega needs y > 0 and -2 sqrt(y) < x < 2 sqrt(y)")
    out = x / 2 + 1j * np.sqrt(y - (x / 2) ** 2)
    return out[()] if out.ndim == 0 else out


def omega_inv(z):
    """``z -> (2 Re z, |z|^2)``."""
    z = np.asarray(z, dtype=complex)
    if np.any(z.imag <= 0):
        raise DomainError("omega_inv needs Im z > 0")
    x, y = 2 * z.real, np.abs(z) ** 2
    if z.ndim == 0:
        return float(x), float(y)
    return x, y


# ---------------------------------------------------------------- sections

def profile_from_dict(d):
    """Build a scalar profile ``t -> value`` from its config form.

    ``{"kind": "constant", "value": v}``, ``{"kind": "linear", "intercept": a,
    "slope": b}``, ``{"kind": "exponential", "scale": a, "rate": r}``
    (``a exp(r t)``).
    """
    kind = d.get("kind")
    if kind == "constant":
        v = float(d["value"])
        return Profile(kind, (v,), lambda t: v + 0.0 * np.asarray(t, dtype=float), 0)
    if kind == "linear":
        a, b = float(d.get("intercept", 0.0)), float(d["slope"])
        return Profile(kind, (a, b), lambda t: a + b * np.asarray(t, dtype=float), np.sign(b))
    if kind == "exponential":
        a, r = float(d.get("scale", 1.0)), float(d["rate"])
        return Profile(kind, (a, r), lambda t: a * np.exp(r * np.asarray(t, dtype=float)),
                       np.sign(r) * np.sign(a))
    raise ConfigError(f"unknown profile kind {kind!r}")


@dataclass(frozen=True)
class Profile:
    kind: str
    params: tuple
    fn: object
    direction: float  # +1 increasing, -1 decreasing, 0 constant

    def __call__(self, t):
        return self.fn(t)

    def to_dict(self):
        if self.kind == "constant":
            return {"kind": "constant", "value": self.params[0]}
        if self.kind == "linear":
            return {"kind": "linear", "intercept": self.params[0], "slope": self.params[1]}
        return {"kind": "exponential", "scale": self.params[0], "rate": self.params[1]}


@dataclass(frozen=True)
class SectionSpec:
    """A monotone section ``t -> (L phi(t), psi(t))``.

    ``phi`` (positive, nonincreasing) gives the matrix-size ratio and ``psi``
    (nondecreasing) the time; ``t_range`` bounds the inverse-map search.
    """

    phi: object
    psi: object
    t0: float
    covariance: object
    t_range: tuple = (-10.0, 10.0)

    def __post_init__(self):
        if getattr(self.phi, "direction", -1) > 0:
            raise ConfigError("phi must be nonincreasing")
        if getattr(self.psi, "direction", 1) < 0:
            raise ConfigError("psi must be nondecreasing")
        if getattr(self.phi, "direction", -1) == 0 and getattr(self.psi, "direction", 1) == 0:
            raise ConfigError("at least one of phi, psi must be strictly monotone")

    def scale(self, t):
        """Real factor multiplying the semicircle point at time ``t``."""
        p0, pt = self.psi(self.t0), self.psi(t)
        if t >= self.t0:
            return covariance_eval(self.covariance, p0, pt)
        return 1.0 / covariance_eval(self.covariance, pt, p0)

    def radius(self, t):
        return self.scale(t) * math.sqrt(float(self.phi(t)))


def section_from_dict(d, covariance):
    return SectionSpec(
        phi=profile_from_dict(d["phi"]),
        psi=profile_from_dict(d["psi"]),
        t0=float(d.get("t0", 0.0)),
        covariance=covariance,
        t_range=tuple(d.get("t_range", (-10.0, 10.0))),
    )


def xi(x, t, sec):
    """Section map ``(x, t) -> scale(t) * (x/2 + i sqrt(phi(t) - x^2/4))``."""
    ph = float(sec.phi(t))
    if not -2 * math.sqrt(ph) < x < 2 * math.sqrt(ph):
        raise DomainError(f"x={x} outside (-2 sqrt(phi(t)), 2 sqrt(phi(t))) at t={t}")
    return sec.scale(t) * omega(x, ph)


def xi_inv(zeta, sec, tol=1e-12, max_iter=200):
    """Invert ``xi``: solve ``radius(t) = |zeta|`` by bisection, then read ``x`` off."""
    zeta = complex(zeta)
    if zeta.imag <= 0:
        raise DomainError("xi_inv needs Im zeta > 0")
    lo, hi = sec.t_range
    r_lo, r_hi = sec.radius(lo), sec.radius(hi)
    if not r_lo > r_hi:
        raise BijectivityError("radial profile is not strictly decreasing on t_range")
    target = abs(zeta)
    if not r_hi <= target <= r_lo:
        raise DomainError(f"|zeta|={target} outside the section's radial range [{r_hi}, {r_lo}]")
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        r_mid = sec.radius(mid)
        if r_mid > target:
            lo = mid
        else:
            hi = mid
        if hi - lo <= tol:
            break
    t = 0.5 * (lo + hi)
    x = 2.0 * zeta.real / sec.scale(t)
    return x, t


@dataclass
class PullbackResult:
    applicable: bool
    max_discrepancy: float
    n_pairs: int
    reason: str = ""


def _multiplicative(cov, times, tol=1e-12):
    times = np.unique(np.asarray(times, dtype=float))
    if getattr(cov, "is_multiplicative", lambda: False)():
        return True
    for i in range(len(times)):
        for j in range(i, len(times)):
            for k in range(j, len(times)):
                a, b, c = times[i], times[j], times[k]
                lhs = covariance_eval(cov, a, b) * covariance_eval(cov, b, c)
                if abs(lhs - covariance_eval(cov, a, c)) > tol:
                    return False
    return True


def section_pullback_check(sec, pairs):
    """Max ``|C(Omega-image, psi(t1); Omega-image, psi(t2)) - G(xi(x1,t1), xi(x2,t2))|``.

    ``pairs`` is a list of ``((x1, t1), (x2, t2))``. The identity requires a
    covariance that is multiplicative along ordered times; otherwise the
    result is flagged as inapplicable.
    """
    times = [sec.psi(t) for pr in pairs for (_, t) in pr] + [sec.psi(sec.t0)]
    if not _multiplicative(sec.covariance, times):
        return PullbackResult(False, float("nan"), len(pairs),
                              "covariance is not multiplicative along the section")
    worst = 0.0
    for (x1, t1), (x2, t2) in pairs:
        if t2 < t1:
            (x1, t1), (x2, t2) = (x2, t2), (x1, t1)
        z1 = omega(x1, float(sec.phi(t1)))
        z2 = omega(x2, float(sec.phi(t2)))
        lhs = kernel_C(z1, sec.psi(t1), z2, sec.psi(t2), sec.covariance)
        rhs = green_halfplane(xi(x1, t1, sec), xi(x2, t2, sec))
        if np.isinf(lhs) and np.isinf(rhs):
            continue
        worst = max(worst, abs(float(lhs) - float(rhs)))
    return PullbackResult(True, worst, len(pairs))


# ---------------------------------------------------------------- positive definiteness

def _stencil(size):
    # midpoint nodes on [-1, 1] with weights of the bump (1 - u^2), normalized
    u = (np.arange(size) + 0.5) / size * 2 - 1
    w = 1 - u ** 2
    return u, w / w.sum()


def mollified_gram(points, cov, eps, size=5, shift=0.5):
    """Gram matrix of ``C`` smeared against bumps of width ``eps``.

    Each point ``(z, s)`` carries a product bump on a ``size x size``
    midpoint stencil in ``(Re z, Im z)``. The right factor's stencil is
    shifted by ``shift`` node spacings so coincident nodes never meet the
    log singularity; the result is symmetrized.
    """
    zs = np.array([complex(p[0]) for p in points])
    ss = np.array([float(p[1]) for p in points])
    if np.any(zs.imag - eps <= 0):
        raise DomainError("bumps must stay inside the upper half-plane (Im z > eps)")
    u, wt = _stencil(size)
    h = 2.0 / size
    du = (u[:, None] + 1j * u[None, :]).ravel() * eps
    dv = ((u + shift * h)[:, None] + 1j * (u + shift * h)[None, :]).ravel() * eps
    ww = np.outer(wt, wt).ravel()
    m = len(zs)
    cmat = np.asarray(cov.evaluate(ss[:, None], ss[None, :]), dtype=float)
    gram = np.empty((m, m))
    for i in range(m):
        zi = zs[i] + du
        for j in range(m):
            wj = zs[j] + dv
            vals = kernel_value(zi[:, None], wj[None, :], cmat[i, j])
            gram[i, j] = ww @ vals @ ww
    return 0.5 * (gram + gram.T)


def gram_pd_check(points, cov, eps):
    """Minimum eigenvalue of the mollified Gram matrix (Proposition-1 check).

    Retries with a finer stencil and a different shift if any entry is
    non-finite.
    """
    if not eps > 0:
        raise ConfigError("eps must be positive")
    for size, shift in ((5, 0.5), (7, 0.37), (9, 0.29)):
        gram = mollified_gram(points, cov, eps, size=size, shift=shift)
        if np.all(np.isfinite(gram)):
            return float(np.linalg.eigvalsh(gram).min())
    raise NumericalError("mollified Gram matrix stays non-finite after stencil refinement")
