import json
import logging
import math

import numpy as np
import pytest

from dysonclt.errors import ConfigError, DegenerateEstimateError, QuarantineError
from dysonclt.montecarlo import (
    ExperimentConfig, compare, correlation_with_jackknife, covariance_with_jackknife, estimate,
    estimate_cumulants, run_experiment, sample_statistics, theory_covariance)

log = logging.getLogger(__name__)


def _cfg(L=30, n=400, beta=1, cov=None, times=(0.0,), sets=None, obs=None, seed=11, **kw):
    d = {
        "L": L,
        "entry": {"beta": beta, "covariance": cov or {"kind": "constant", "value": 1.0}},
        "times": list(times),
        "sets": sets or {"A": {"prefix": L}},
        "observables": obs or [{"set": "A", "time": times[0], "statistic": "power", "degrees": [1, 2]}],
        "n_samples": n,
        "seed": seed,
    }
    d.update(kw)
    return ExperimentConfig.from_dict(d)


def test_config_validation():
    with pytest.raises(ConfigError):
        _cfg(n=50)
    with pytest.raises(ConfigError):
        _cfg(obs=[{"set": "B", "time": 0, "statistic": "power", "k": 1}])
    with pytest.raises(ConfigError):
        _cfg(obs=[{"set": "A", "time": 0.3, "statistic": "power", "k": 1}])
    with pytest.raises(ConfigError):
        _cfg(times=(0.5, 0.0))
    with pytest.raises(ConfigError):
        _cfg(obs=[{"set": "A", "time": 0, "statistic": "legendre", "k": 1}])
    cfg = _cfg()
    assert ExperimentConfig.from_dict(cfg.to_dict()).to_dict() == cfg.to_dict()


@pytest.mark.parametrize("beta", [1, 2])
def test_trace_variance_is_two_over_beta(beta):
    # tr X is a sum of diagonal entries, so its normalized variance is 2/beta at every L
    cfg = _cfg(L=40, n=3000, beta=beta, obs=[{"set": "A", "time": 0, "statistic": "power", "k": 1}])
    rep = compare(run_experiment(cfg), cfg)
    row = rep.rows[0]
    assert row["theory"] == 2 / beta
    assert abs(row["z"]) <= 5


def test_duplicated_observable_has_unit_correlation():
    obs = [{"set": "A", "time": 0, "statistic": "power", "k": 2}] * 2
    cfg = _cfg(obs=obs)
    est = run_experiment(cfg)
    assert est.corr[0, 1] == 1.0 and est.corr_se[0, 1] == 0.0
    rep = compare(est, cfg)
    assert all(r["verdict"] == "pass" for r in rep.rows)


def test_determinism_and_worker_independence():
    cfg = _cfg(n=300, cov={"kind": "ou", "rate": 1.0}, times=(0.0, 0.5),
               obs=[{"set": "A", "times": [0, 0.5], "statistic": "chebyshev", "degrees": [1, 2]}])
    a = run_experiment(cfg)
    b = run_experiment(cfg)
    c = run_experiment(cfg, threads=2)
    for other in (b, c):
        assert np.array_equal(a.cov, other.cov) and np.array_equal(a.cov_se, other.cov_se)
        assert np.array_equal(a.mean, other.mean)
        for k in a.cumulants:
            assert np.array_equal(a.cumulants[k], other.cumulants[k])


def test_estimate_table_invariants():
    est = run_experiment(_cfg(obs=[{"set": "A", "time": 0, "statistic": "power", "degrees": [1, 2, 3]}]))
    assert np.array_equal(est.cov, est.cov.T)
    assert np.all(est.cov_se > 0)
    assert est.n_samples == 400 and est.n_quarantined == 0
    json.dumps(est.to_dict())


def test_cumulant_examples():
    rng = np.random.default_rng(0)
    g = estimate_cumulants(rng.standard_normal(100_000))
    assert abs(g["k3"][0]) <= 5 * g["k3_se"][0]
    assert abs(g["k4"][0]) <= 5 * g["k4_se"][0]
    e = estimate_cumulants(rng.exponential(1.0, 100_000) - 1)
    assert abs(e["k3"][0] - 2) <= 5 * e["k3_se"][0]
    assert abs(e["k4"][0] - 6) <= 5 * e["k4_se"][0]
    c = estimate_cumulants(np.full(5000, 3.25))
    assert c["k3"][0] == 0 and c["k4"][0] == 0


def test_kstatistics_are_unbiased_formulas():
    # k-statistics of a tiny sample against scipy's implementation
    from scipy.stats import kstat
    x = np.array([0.3, -1.2, 2.5, 0.7, 1.1, -0.4, 3.3])
    got = estimate_cumulants(x)
    assert got["k3"][0] == pytest.approx(kstat(x, 3), rel=1e-12)
    assert got["k4"][0] == pytest.approx(kstat(x, 4), rel=1e-12)


def test_jackknife_covariance_matches_bruteforce():
    x = np.random.default_rng(1).standard_normal((40, 3)) @ np.array([[1, 0.3, 0], [0, 1, 0.5], [0, 0, 1]])
    cov, se = covariance_with_jackknife(x)
    corr, cse = correlation_with_jackknife(x)
    n = len(x)
    loo = np.array([np.cov(np.delete(x, i, 0), rowvar=False) for i in range(n)])
    looc = np.array([np.corrcoef(np.delete(x, i, 0), rowvar=False) for i in range(n)])
    np.testing.assert_allclose(cov, np.cov(x, rowvar=False), rtol=1e-12)
    np.testing.assert_allclose(se, np.sqrt((n - 1) / n * ((loo - loo.mean(0)) ** 2).sum(0)), rtol=1e-9)
    np.testing.assert_allclose(cse, np.sqrt((n - 1) / n * ((looc - looc.mean(0)) ** 2).sum(0)), rtol=1e-9, atol=1e-15)


def test_estimator_unbiased_on_synthetic_gaussians():
    rng = np.random.default_rng(2)
    a = rng.standard_normal((4, 4))
    sigma = a @ a.T + np.eye(4)
    x = rng.multivariate_normal(np.zeros(4), sigma, size=10_000)
    est = estimate(x)
    assert np.all(np.abs(est.cov - sigma) <= 5 * est.cov_se)
    rho = sigma / np.sqrt(np.outer(np.diag(sigma), np.diag(sigma)))
    off = ~np.eye(4, dtype=bool)
    assert np.all(np.abs(est.corr - rho)[off] <= 5 * est.corr_se[off])


def test_stderr_scaling_with_sample_size():
    obs = [{"set": "A", "time": 0, "statistic": "power", "degrees": [1, 2]}]
    small = run_experiment(_cfg(L=20, n=1000, obs=obs, seed=3))
    large = run_experiment(_cfg(L=20, n=2000, obs=obs, seed=4))
    ratio = large.cov_se[1, 1] / small.cov_se[1, 1]
    assert abs(ratio - 1 / math.sqrt(2)) <= 0.2 / math.sqrt(2)


def test_quarantine():
    x = np.random.default_rng(5).standard_normal((5000, 2))
    x[17, 1] = np.nan
    est = estimate(x)
    assert est.n_quarantined == 1 and est.n_samples == 4999
    x[:10, 0] = np.inf
    with pytest.raises(QuarantineError):
        estimate(x)


def test_compare_examples():
    ou = _cfg(L=200, n=100, cov={"kind": "ou", "rate": 1.0}, times=(0.0, 0.5),
              sets={"full": {"prefix": 200}, "half": {"prefix": 100}},
              obs=[{"set": "full", "time": 0, "statistic": "power", "k": 1},
                   {"set": "half", "time": 0.5, "statistic": "power", "k": 1},
                   {"set": "full", "time": 0, "statistic": "chebyshev", "degrees": [2, 3]},
                   {"set": "full", "time": 0, "statistic": "power", "k": 2}])
    theo = theory_covariance(ou)
    assert theo[0, 1] == pytest.approx(2 * math.exp(-0.5) * 0.5)
    assert theo[2, 3] == 0.0
    assert theo[4, 4] == 4.0


def test_degenerate_estimate():
    cfg = _cfg(obs=[{"set": "A", "time": 0, "statistic": "power", "k": 1}])
    est = estimate(np.full((200, 1), 1.0))
    with pytest.raises(DegenerateEstimateError):
        compare(est, cfg)


def test_report_serialization(tmp_path):
    cfg = _cfg()
    rep = compare(run_experiment(cfg), cfg)
    rep.write_json(tmp_path / "r.json")
    rep.write_csv(tmp_path / "r.csv")
    data = json.loads((tmp_path / "r.json").read_text())
    assert data["passed"] == rep.passed and data["metadata"]["seed"] == 11
    lines = (tmp_path / "r.csv").read_text().splitlines()
    for key in ("#seed=11", "#L=30", "#n_samples=400", "#version="):
        assert key in lines[0]
    assert lines[1].startswith("kind,p,q")
    for r in rep.rows + rep.gaussianity:
        assert (r["verdict"] == "pass") == (max(abs(r.get("z", 0)), abs(r.get("z3", 0)), abs(r.get("z4", 0))) <= cfg.z_max)


def test_sample_statistics_shape():
    cfg = _cfg(n=120)
    s = sample_statistics(cfg, chunk=50)
    assert s.shape == (120, 2) and np.all(np.isfinite(s))


def test_finite_size_trend(caplog):
    # soft check: the k=2 variance drifts toward its limit 4 as L grows
    caplog.set_level(logging.INFO)
    obs = [{"set": "A", "time": 0, "statistic": "power", "k": 2}]
    means = {}
    for L in (50, 100, 200):
        vals = [run_experiment(_cfg(L=L, n=200, obs=obs, seed=100 + s)).cov[0, 0] for s in range(5)]
        means[L] = float(np.mean(vals))
        log.info("L=%d mean variance of normalized tr X^2: %.4f (limit 4)", L, means[L])
    dist = [abs(means[L] - 4) for L in (50, 100, 200)]
    if not dist[0] >= dist[1] >= dist[2]:
        log.warning("finite-size trend not monotone at this sample size: %s", means)
    assert all(abs(m - 4) < 1.5 for m in means.values())
