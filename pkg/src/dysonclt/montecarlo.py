"""Monte Carlo harness: sample ensembles, measure observables, compare to theory.

Sample ``i`` of an experiment with root seed ``s`` is generated from the
derived seed ``sample_seed(s, i)``; per-sample work is pure, so chunks of
samples can run in separate processes and are concatenated in index order.
All reductions then run on the full ``(n_samples, m)`` statistics matrix in
a fixed order, which keeps results bitwise independent of the worker count.
"""
import csv
import json
import logging
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import _backend, _rng
from .entry_process import EntryProcessSpec, covariance_eval
from .errors import ConfigError, DegenerateEstimateError, QuarantineError
from .observables import chebyshev_trace, eigenvalues
from .theory import observable_covariance
from .wigner import IndexSet, overlap_fraction, sample_ensemble, submatrix

log = logging.getLogger(__name__)

STATISTICS = ("power", "chebyshev")
QUARANTINE_LIMIT = 1e-3


@dataclass(frozen=True)
class ObservableSpec:
    set_id: str
    time: float
    statistic: str
    k: int

    def __post_init__(self):
        if self.statistic not in STATISTICS:
            raise ConfigError(f"unknown statistic {self.statistic!r}")
        if self.k < 1:
            raise ConfigError("observable degree must be >= 1")

    @property
    def name(self):
        tag = "tr" if self.statistic == "power" else "cheb"
        return f"{tag}{self.k}[{self.set_id}@t={self.time:g}]"


@dataclass
class ExperimentConfig:
    L: float
    entry: EntryProcessSpec
    times: tuple
    sets: dict
    observables: list
    n_samples: int
    seed: int = 0
    z_max: float = 5.0
    ambient_dim: int = None
    name: str = "experiment"
    threads: int = 1

    def __post_init__(self):
        self.times = tuple(float(t) for t in self.times)
        if len(set(self.times)) != len(self.times) or list(self.times) != sorted(self.times):
            raise ConfigError("times must be strictly increasing")
        if not self.L > 0:
            raise ConfigError("L must be positive")
        if self.n_samples < 100:
            raise ConfigError("n_samples must be >= 100")
        if not self.observables:
            raise ConfigError("at least one observable is required")
        for ob in self.observables:
            if ob.set_id not in self.sets:
                raise ConfigError(f"observable {ob.name} references unknown set {ob.set_id!r}")
            if ob.time not in self.times:
                raise ConfigError(f"observable {ob.name} uses time {ob.time} not on the grid")
        top = max(s.max for s in self.sets.values())
        if self.ambient_dim is None:
            self.ambient_dim = top
        elif self.ambient_dim < top:
            raise ConfigError(f"ambient_dim {self.ambient_dim} is below the largest index {top}")

    @property
    def beta(self):
        return self.entry.beta

    def labels(self):
        return np.unique(np.concatenate([s.elements for s in self.sets.values()]))

    @classmethod
    def from_dict(cls, d):
        sets = {name: IndexSet.from_config(v) for name, v in d["sets"].items()}
        obs = []
        for o in d["observables"]:
            times = o["times"] if "times" in o else [o["time"]]
            degrees = o["degrees"] if "degrees" in o else [o["k"]]
            for t in times:
                for k in degrees:
                    obs.append(ObservableSpec(o["set"], float(t), o["statistic"], int(k)))
        return cls(
            L=float(d["L"]),
            entry=EntryProcessSpec.from_dict(d["entry"]),
            times=tuple(d["times"]),
            sets=sets,
            observables=obs,
            n_samples=int(d["n_samples"]),
            seed=int(d.get("seed", 0)),
            z_max=float(d.get("z_max", 5.0)),
            ambient_dim=d.get("ambient_dim"),
            name=d.get("name", "experiment"),
            threads=int(d.get("threads", 1)),
        )

    def to_dict(self):
        sets = {}
        for name, s in self.sets.items():
            e = s.elements
            sets[name] = {"prefix": int(e[-1])} if e[0] == 1 and e[-1] == len(e) else e.tolist()
        return {
            "schema_version": 1,
            "name": self.name,
            "L": self.L,
            "entry": self.entry.to_dict(),
            "times": list(self.times),
            "sets": sets,
            "observables": [
                {"set": o.set_id, "time": o.time, "statistic": o.statistic, "k": o.k}
                for o in self.observables
            ],
            "n_samples": self.n_samples,
            "seed": self.seed,
            "z_max": self.z_max,
            "ambient_dim": self.ambient_dim,
            "threads": self.threads,
        }


# ---------------------------------------------------------------- sampling

def _sample_statistics(cfg, index):
    seed = _rng.sample_seed(cfg.seed, index)
    sample = sample_ensemble(cfg.ambient_dim, cfg.entry, cfg.times, seed, labels=cfg.labels())
    spectra = {}
    out = np.empty(len(cfg.observables))
    for p, ob in enumerate(cfg.observables):
        key = (ob.set_id, ob.time)
        if key not in spectra:
            t_idx = cfg.times.index(ob.time)
            spectra[key] = eigenvalues(submatrix(sample, cfg.sets[ob.set_id], t_idx))
        eigs = spectra[key]
        if ob.statistic == "power":
            out[p] = np.sum(eigs ** ob.k) * cfg.L ** (-ob.k / 2)
        else:
            b = len(cfg.sets[ob.set_id]) / cfg.L
            out[p] = chebyshev_trace(eigs, ob.k, b, cfg.L)
    return out


def _run_chunk(cfg_dict, start, stop):
    cfg = ExperimentConfig.from_dict(cfg_dict)
    out = np.empty((stop - start, len(cfg.observables)))
    for r, i in enumerate(range(start, stop)):
        try:
            out[r] = _sample_statistics(cfg, i)
        except ArithmeticError:
            out[r] = np.nan
    return out


def sample_statistics(cfg, threads=None, chunk=500):
    """``(n_samples, m)`` matrix of normalized statistics, rows in sample order."""
    threads = threads or cfg.threads or 1
    bounds = [(s, min(s + chunk, cfg.n_samples)) for s in range(0, cfg.n_samples, chunk)]
    cfg_dict = cfg.to_dict()
    if threads <= 1:
        parts = [_run_chunk(cfg_dict, a, b) for a, b in bounds]
    else:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(_run_chunk, [cfg_dict] * len(bounds),
                                  [a for a, _ in bounds], [b for _, b in bounds]))
    return np.concatenate(parts, axis=0)


# ---------------------------------------------------------------- estimators

def covariance_with_jackknife(x):
    """Unbiased covariance of the columns of ``x`` and jackknife standard errors.

    With centered data the leave-one-out covariance is
    ``(S_pq - x_ip x_iq n/(n-1)) / (n-2)``, so the jackknife deviations are
    proportional to ``x_ip x_iq`` minus its mean.
    """
    x = np.asarray(x, dtype=float)
    n = x.shape[0]
    xc = x - x.mean(axis=0)
    cov = xc.T @ xc / (n - 1)
    se = np.empty_like(cov)
    fac = n / ((n - 1) * (n - 2))
    for p in range(x.shape[1]):
        y = xc[:, p:p + 1] * xc
        dev = y - y.mean(axis=0)
        se[p] = fac * np.sqrt((n - 1) / n * np.sum(dev * dev, axis=0))
    return cov, se


def correlation_with_jackknife(x):
    """Sample correlation matrix with jackknife standard errors."""
    x = np.asarray(x, dtype=float)
    n, m = x.shape
    xc = x - x.mean(axis=0)
    s = xc.T @ xc
    d = np.diag(s)
    with np.errstate(invalid="ignore", divide="ignore"):
        # sqrt(v * v) == v in IEEE arithmetic, so identical columns give exactly 1
        corr = np.clip(s / np.sqrt(np.outer(d, d)), -1.0, 1.0)
    se = np.zeros_like(corr)
    g = n / (n - 1)
    diag_loo = (np.diag(s)[None, :] - xc * xc * g) / (n - 2)
    for p in range(m):
        loo = (s[p][None, :] - xc[:, p:p + 1] * xc * g) / (n - 2)
        with np.errstate(invalid="ignore", divide="ignore"):
            r = loo / np.sqrt(diag_loo[:, p:p + 1] * diag_loo)
        dev = r - r.mean(axis=0)
        se[p] = np.sqrt((n - 1) / n * np.sum(dev * dev, axis=0))
    return corr, se


def _kstats_from_sums(n, s1, s2, s3, s4):
    k3 = (n * n * s3 - 3 * n * s2 * s1 + 2 * s1 ** 3) / (n * (n - 1) * (n - 2))
    k4 = ((n ** 3 + n ** 2) * s4 - 4 * (n ** 2 + n) * s3 * s1 - 3 * (n ** 2 - n) * s2 ** 2
          + 12 * n * s2 * s1 ** 2 - 6 * s1 ** 4) / (n * (n - 1) * (n - 2) * (n - 3))
    return k3, k4


def estimate_cumulants(samples):
    """Unbiased k-statistics ``k3``, ``k4`` per column with jackknife errors.

    ``k4`` estimates the fourth cumulant, i.e. the excess kurtosis times
    ``sigma^4``; both vanish for Gaussian data.
    """
    x = np.asarray(samples, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    n = x.shape[0]
    if n < 5:
        raise ConfigError("need at least 5 samples for k-statistics")
    xc = x - x.mean(axis=0)
    const = np.ptp(x, axis=0) == 0
    xc[:, const] = 0.0
    p = [None] + [xc ** r for r in range(1, 5)]
    sums = [None] + [pr.sum(axis=0) for pr in p[1:]]
    k3, k4 = _kstats_from_sums(float(n), *sums[1:])
    l3, l4 = _kstats_from_sums(float(n - 1), *(sums[r][None, :] - p[r] for r in range(1, 5)))
    jf = (n - 1) / n
    se3 = np.sqrt(jf * np.sum((l3 - l3.mean(axis=0)) ** 2, axis=0))
    se4 = np.sqrt(jf * np.sum((l4 - l4.mean(axis=0)) ** 2, axis=0))
    k3 = np.where(const, 0.0, k3)
    k4 = np.where(const, 0.0, k4)
    return {"k3": k3, "k3_se": se3, "k4": k4, "k4_se": se4}


@dataclass
class EstimateTable:
    names: list
    n_samples: int
    n_quarantined: int
    mean: np.ndarray
    cov: np.ndarray
    cov_se: np.ndarray
    corr: np.ndarray
    corr_se: np.ndarray
    cumulants: dict
    samples: np.ndarray = None
    metadata: dict = field(default_factory=dict)

    def to_dict(self):
        return {
            "names": self.names,
            "n_samples": self.n_samples,
            "n_quarantined": self.n_quarantined,
            "mean": self.mean.tolist(),
            "cov": self.cov.tolist(),
            "cov_se": self.cov_se.tolist(),
            "corr": self.corr.tolist(),
            "corr_se": self.corr_se.tolist(),
            "cumulants": {k: v.tolist() for k, v in self.cumulants.items()},
            "metadata": self.metadata,
        }


def estimate(stats, names=None, keep_samples=False, metadata=None):
    """Build an ``EstimateTable`` from a statistics matrix, quarantining bad rows."""
    stats = np.asarray(stats, dtype=float)
    n_total, m = stats.shape
    good = np.all(np.isfinite(stats), axis=1)
    n_bad = int(n_total - good.sum())
    if n_bad > QUARANTINE_LIMIT * n_total:
        raise QuarantineError(f"{n_bad} of {n_total} samples produced non-finite statistics")
    if n_bad:
        log.warning("quarantined %d non-finite samples", n_bad)
    x = stats[good]
    cov, cov_se = covariance_with_jackknife(x)
    corr, corr_se = correlation_with_jackknife(x)
    return EstimateTable(
        names=list(names) if names is not None else [f"obs{p}" for p in range(m)],
        n_samples=int(good.sum()),
        n_quarantined=n_bad,
        mean=x.mean(axis=0),
        cov=cov,
        cov_se=cov_se,
        corr=corr,
        corr_se=corr_se,
        cumulants=estimate_cumulants(x),
        samples=x if keep_samples else None,
        metadata=dict(metadata or {}),
    )


def run_experiment(cfg, threads=None, keep_samples=False):
    """Sample the ensemble ``cfg.n_samples`` times and estimate moments."""
    t0 = time.perf_counter()
    stats = sample_statistics(cfg, threads=threads)
    meta = {
        "name": cfg.name,
        "seed": cfg.seed,
        "L": cfg.L,
        "n_samples": cfg.n_samples,
        "beta": cfg.beta,
        "backend": _backend.NAME,
        "runtime_s": round(time.perf_counter() - t0, 3),
    }
    return estimate(stats, [o.name for o in cfg.observables], keep_samples, meta)


# ---------------------------------------------------------------- comparison

def theory_covariance(cfg):
    """``m x m`` limit covariance matrix for the configured observables."""
    obs = cfg.observables
    m = len(obs)
    out = np.empty((m, m))
    for p in range(m):
        for q in range(p, m):
            op, oq = obs[p], obs[q]
            b_p, b_q, b_pq = overlap_fraction(cfg.sets[op.set_id], cfg.sets[oq.set_id], cfg.L)
            c = covariance_eval(cfg.entry.covariance, op.time, oq.time)
            out[p, q] = out[q, p] = observable_covariance(
                op.statistic, op.k, oq.statistic, oq.k, b_p, b_q, b_pq, c, cfg.beta)
    return out


@dataclass
class ComparisonReport:
    rows: list
    gaussianity: list
    metadata: dict

    @property
    def passed(self):
        return all(r["verdict"] == "pass" for r in self.rows + self.gaussianity)

    def failures(self):
        return [r for r in self.rows + self.gaussianity if r["verdict"] != "pass"]

    def to_dict(self):
        return {"metadata": self.metadata, "passed": self.passed,
                "rows": self.rows, "gaussianity": self.gaussianity}

    def write_json(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2, default=float)

    def write_csv(self, path):
        cols = ["kind", "p", "q", "name_p", "name_q", "theory", "empirical", "stderr", "z", "verdict"]
        with open(path, "w", newline="") as fh:
            fh.write(metadata_comment(self.metadata))
            w = csv.writer(fh)
            w.writerow(cols)
            for r in self.rows:
                w.writerow([r[c] for c in cols])
            for g in self.gaussianity:
                for kind in ("k3", "k4"):
                    w.writerow([kind, g["p"], g["p"], g["name"], g["name"], 0.0,
                                g[kind], g[kind + "_se"], g["z" + kind[1]], g["verdict"]])


def metadata_comment(meta):
    from . import __version__
    keys = ("seed", "L", "n_samples")
    parts = [f"#{k}={meta.get(k)}" for k in keys] + [f"#version={__version__}"]
    return " ".join(parts) + "\n"


def _zscore(emp, theory, se):
    diff = emp - theory
    if se == 0 or not np.isfinite(se):
        if diff == 0:
            return 0.0
        raise DegenerateEstimateError(
            f"zero standard error with discrepancy {diff:.3e} (empirical {emp}, theory {theory})")
    return diff / se


def compare(est, cfg, pairs=None, correlations=True):
    """z-score every covariance (and correlation) entry against theory.

    ``pairs`` restricts the comparison to a list of ``(p, q)`` index pairs;
    by default all ``p <= q`` are used.
    """
    theo = theory_covariance(cfg)
    m = len(cfg.observables)
    if pairs is None:
        pairs = [(p, q) for p in range(m) for q in range(p, m)]
    rows = []
    for p, q in pairs:
        z = _zscore(est.cov[p, q], theo[p, q], est.cov_se[p, q])
        rows.append(_row("cov", p, q, est, theo[p, q], est.cov[p, q], est.cov_se[p, q], z, cfg))
        if correlations and p != q:
            denom = math.sqrt(theo[p, p] * theo[q, q])
            if denom > 0:
                tc = theo[p, q] / denom
                zc = _zscore(est.corr[p, q], tc, est.corr_se[p, q])
                rows.append(_row("corr", p, q, est, tc, est.corr[p, q], est.corr_se[p, q], zc, cfg))
    cum = est.cumulants
    gauss = []
    for p in range(m):
        z3 = _zscore(cum["k3"][p], 0.0, cum["k3_se"][p])
        z4 = _zscore(cum["k4"][p], 0.0, cum["k4_se"][p])
        gauss.append({
            "p": p, "name": est.names[p],
            "k3": float(cum["k3"][p]), "k3_se": float(cum["k3_se"][p]), "z3": float(z3),
            "k4": float(cum["k4"][p]), "k4_se": float(cum["k4_se"][p]), "z4": float(z4),
            "verdict": "pass" if max(abs(z3), abs(z4)) <= cfg.z_max else "fail",
        })
    meta = dict(est.metadata)
    meta.update({"z_max": cfg.z_max, "seed": cfg.seed, "L": cfg.L, "n_samples": est.n_samples})
    return ComparisonReport(rows, gauss, meta)


def _row(kind, p, q, est, theory, emp, se, z, cfg):
    return {
        "kind": kind, "p": p, "q": q, "name_p": est.names[p], "name_q": est.names[q],
        "theory": float(theory), "empirical": float(emp), "stderr": float(se), "z": float(z),
        "verdict": "pass" if abs(z) <= cfg.z_max else "fail",
    }


def default_threads():
    return max(1, len(os.sched_getaffinity(0)) if hasattr(os, "sched_getaffinity") else 1)
