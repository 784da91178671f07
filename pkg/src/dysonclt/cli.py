"""Command-line interface.

Exit codes: 0 success, 1 verdict failure, 2 usage error, 3 configuration
error, 4 numerical error.
"""
import argparse
import csv
import json
import logging
import math
import sys
import time
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import __version__, config, kernel, theory
from .entry_process import Constant, OrnsteinUhlenbeck, covariance_from_dict, covariance_eval
from .errors import ConfigError, DysonCLTError, NumericalError
from .montecarlo import ExperimentConfig, compare, metadata_comment, run_experiment
from .wigner import overlap_fraction

log = logging.getLogger("dysonclt")

EXIT_OK, EXIT_VERDICT, EXIT_USAGE, EXIT_CONFIG, EXIT_NUMERICAL = 0, 1, 2, 3, 4
NEEDS_CONFIG = ("theory", "simulate", "compare", "kernel")


def build_parser():
    p = argparse.ArgumentParser(prog="dysonclt", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True, metavar="COMMAND")
    helps = {
        "theory": "tabulate limit covariances with every evaluator",
        "simulate": "run the Monte Carlo experiment and write estimates",
        "compare": "simulate and z-score the estimates against theory",
        "kernel": "tabulate the field kernel and section map, run the kernel checks",
        "selftest": "check deterministic identities (no sampling)",
    }
    for name, text in helps.items():
        sp = sub.add_parser(name, help=text, description=text)
        sp.add_argument("--config", metavar="PATH", help="config file or preset name")
        sp.add_argument("--out", metavar="DIR", default=".", help="output directory")
        sp.add_argument("--format", choices=("csv", "json", "both"), default="both")
        sp.add_argument("-v", "--verbose", action="store_true")
        if name in ("simulate", "compare"):
            sp.add_argument("--seed", type=_u64, help="override the root seed")
            sp.add_argument("--samples", type=int, help="override n_samples")
            sp.add_argument("--threads", type=int, help="worker processes")
            sp.add_argument("--L", dest="L", type=float, help="override the scale L")
            sp.add_argument("--dump-samples", action="store_true",
                            help="also write the per-sample statistics")
        if name == "theory":
            sp.add_argument("--L", dest="L", type=float, help="override the scale L")
    return p


def _u64(text):
    v = int(text, 0)
    if not 0 <= v < 2 ** 64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return v


def parse_and_validate(argv=None):
    """Parse ``argv`` and load the config; usage problems exit with code 2.

    Returns ``(args, cfg)`` where ``cfg`` is the validated config dict with
    command-line overrides applied, or ``None`` for ``selftest``.
    """
    parser = build_parser()
    args = parser.parse_args(argv)
    cfg = None
    if args.command in NEEDS_CONFIG:
        if not args.config:
            parser.error(f"{args.command} requires --config")
        if config.resolve(args.config) is None:
            parser.error(f"config {args.config!r} is neither a file nor a preset "
                         f"({', '.join(config.preset_names())})")
        cfg = config.load(args.config)
        for key, attr in (("seed", "seed"), ("n_samples", "samples"),
                          ("threads", "threads"), ("L", "L")):
            val = getattr(args, attr, None)
            if val is not None:
                cfg[key] = val
        config.validate(cfg)
    return args, cfg


# ---------------------------------------------------------------- output helpers

def _write_csv(path, header, rows, meta):
    with open(path, "w", newline="") as fh:
        fh.write(metadata_comment(meta))
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows(rows)
    log.info("wrote %s", path)


def _write_json(path, obj):
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, default=float)
    log.info("wrote %s", path)


def _wants(fmt, kind):
    return fmt in (kind, "both")


# ---------------------------------------------------------------- commands

def cmd_theory(args, cfg):
    config.require_experiment(cfg, need_samples=False)
    cfg = dict(cfg, n_samples=max(cfg.get("n_samples", 100), 100))
    exp = ExperimentConfig.from_dict(cfg)
    obs = exp.observables
    header = ["p", "q", "name_p", "name_q", "b_p", "b_q", "b_pq", "c",
              "series", "contour", "logkernel", "chebyshev_closed", "chebyshev_expanded"]
    rows = []
    for p in range(len(obs)):
        for q in range(p, len(obs)):
            op, oq = obs[p], obs[q]
            b_p, b_q, b_pq = overlap_fraction(exp.sets[op.set_id], exp.sets[oq.set_id], exp.L)
            c = covariance_eval(exp.entry.covariance, op.time, oq.time)
            series = theory.observable_covariance(op.statistic, op.k, oq.statistic, oq.k,
                                                  b_p, b_q, b_pq, c, exp.beta)
            contour = logk = closed = expanded = ""
            if op.statistic == oq.statistic == "power":
                qq = theory.CovarianceQuery(op.k, oq.k, b_p, b_q, b_pq, c, exp.beta)
                contour = theory.covariance_contour(qq)
                logk = theory.covariance_logkernel(qq)
            elif op.statistic == oq.statistic == "chebyshev":
                closed = theory.chebyshev_covariance_closed(op.k, oq.k, b_p, b_q, b_pq, c, exp.beta)
                expanded = theory.chebyshev_covariance_expanded(op.k, oq.k, b_p, b_q, b_pq, c, exp.beta)
            rows.append([p, q, op.name, oq.name, b_p, b_q, b_pq, c,
                         series, contour, logk, closed, expanded])
    meta = {"seed": exp.seed, "L": exp.L, "n_samples": 0}
    out = Path(args.out)
    if _wants(args.format, "csv"):
        _write_csv(out / "theory.csv", header, rows, meta)
    if _wants(args.format, "json"):
        _write_json(out / "theory.json", {"metadata": meta, "columns": header, "rows": rows})
    print(f"theory: {len(rows)} covariance entries for {len(obs)} observables")
    return EXIT_OK


def _experiment(args, cfg):
    config.require_experiment(cfg)
    exp = ExperimentConfig.from_dict(cfg)
    log.info("running %s: %d samples, L=%g", exp.name, exp.n_samples, exp.L)
    est = run_experiment(exp, threads=getattr(args, "threads", None), keep_samples=args.dump_samples)
    out = Path(args.out)
    meta = est.metadata
    if _wants(args.format, "csv"):
        cum = est.cumulants
        rows = [[p, est.names[p], est.mean[p], est.cov[p, p], est.cov_se[p, p],
                 cum["k3"][p], cum["k3_se"][p], cum["k4"][p], cum["k4_se"][p]]
                for p in range(len(est.names))]
        _write_csv(out / "estimates.csv",
                   ["p", "name", "mean", "var", "var_se", "k3", "k3_se", "k4", "k4_se"], rows, meta)
        m = len(est.names)
        cov_rows = [[p, q, est.cov[p, q], est.cov_se[p, q], est.corr[p, q], est.corr_se[p, q]]
                    for p in range(m) for q in range(p, m)]
        _write_csv(out / "covariance.csv", ["p", "q", "cov", "cov_se", "corr", "corr_se"],
                   cov_rows, meta)
    if _wants(args.format, "json"):
        _write_json(out / "estimates.json", est.to_dict())
    if args.dump_samples:
        _write_csv(out / "samples.csv", ["sample"] + est.names,
                   [[i] + row.tolist() for i, row in enumerate(est.samples)], meta)
    return exp, est


def cmd_simulate(args, cfg):
    exp, est = _experiment(args, cfg)
    print(f"simulate: {est.n_samples} samples ({est.n_quarantined} quarantined), "
          f"{len(est.names)} observables")
    return EXIT_OK


def cmd_compare(args, cfg):
    exp, est = _experiment(args, cfg)
    rep = compare(est, exp)
    out = Path(args.out)
    if _wants(args.format, "csv"):
        rep.write_csv(out / "report.csv")
    if _wants(args.format, "json"):
        rep.write_json(out / "report.json")
    worst = max(abs(r["z"]) for r in rep.rows)
    print(f"compare: {len(rep.rows)} covariance checks, {len(rep.gaussianity)} Gaussianity "
          f"checks, max |z| = {worst:.2f}, z_max = {exp.z_max:g}")
    for r in rep.failures():
        print(f"  FAIL {r}")
    print("PASS" if rep.passed else "FAIL")
    return EXIT_OK if rep.passed else EXIT_VERDICT


def cmd_kernel(args, cfg):
    if "section" not in cfg:
        raise ConfigError("kernel needs a /section entry")
    cov = covariance_from_dict(cfg.get("entry", {}).get("covariance", {"kind": "ou", "rate": 1.0}))
    sec = kernel.section_from_dict(cfg["section"], cov)
    grid = cfg.get("kernel_grid", {})
    xs = grid.get("x", [-1.0, -0.5, 0.0, 0.5, 1.0])
    ts = grid.get("t", [0.0, 0.5, 1.0])
    x0, t0 = grid.get("reference", [0.0, sec.t0])
    z0 = kernel.omega(x0, float(sec.phi(t0)))
    map_rows, ker_rows, points = [], [], []
    for t in ts:
        root = 2 * math.sqrt(float(sec.phi(t)))
        for x in xs:
            if not -root < x < root:
                continue
            z = kernel.omega(x, float(sec.phi(t)))
            zeta = kernel.xi(x, t, sec)
            map_rows.append([x, t, sec.psi(t), z.real, z.imag, zeta.real, zeta.imag])
            c_val = kernel.kernel_C(z0, sec.psi(t0), z, sec.psi(t), cov)
            g_val = kernel.green_halfplane(kernel.xi(x0, t0, sec), zeta)
            ker_rows.append([x, t, float(c_val), float(g_val)])
            points.append(((x, t), (x0, t0)))
    pull = kernel.section_pullback_check(sec, points)
    pts = [(complex(r[3], r[4]), r[2]) for r in map_rows[:10]]
    eps = 0.25 * min(p[0].imag for p in pts)
    min_eig = kernel.gram_pd_check(pts, cov, eps)
    meta = {"seed": None, "L": None, "n_samples": 0}
    out = Path(args.out)
    if _wants(args.format, "csv"):
        _write_csv(out / "section_map.csv",
                   ["x", "t", "time", "re_omega", "im_omega", "re_xi", "im_xi"], map_rows, meta)
        _write_csv(out / "kernel.csv", ["x", "t", "C", "G_pullback"], ker_rows, meta)
    summary = {"pullback_applicable": pull.applicable, "pullback_max_discrepancy": pull.max_discrepancy,
               "pullback_pairs": pull.n_pairs, "gram_points": len(pts), "gram_min_eigenvalue": min_eig}
    if _wants(args.format, "json"):
        _write_json(out / "kernel.json", summary)
    ok = min_eig >= -1e-9 and (not pull.applicable or pull.max_discrepancy <= 1e-10)
    print(f"kernel: {len(map_rows)} grid points, pullback discrepancy "
          f"{pull.max_discrepancy:.2e}, Gram min eigenvalue {min_eig:.3e}")
    print("PASS" if ok else "FAIL")
    return EXIT_OK if ok else EXIT_VERDICT


# ---------------------------------------------------------------- selftest

def _check_combinatorics():
    n = 0
    for r in range(1, 9):
        for S in range(11):
            assert theory.catalan_convolution_bruteforce(r, S) == theory.catalan_convolution(r, S)
            n += 1
    for k in range(1, 13):
        for beta in (1, 2):
            assert theory.variance_catalan_form(k) * Fraction(1, beta) == \
                theory.covariance_series_exact(k, k, beta=beta)
            n += 1
    return n


def _check_series_values():
    cases = {(1, 1): 2, (2, 2): 4, (3, 3): 24, (1, 2): 0, (1, 3): 6}
    for (kp, kq), want in cases.items():
        got = theory.covariance_series(theory.CovarianceQuery(kp, kq, 1, 1, 1, 1, 1))
        assert abs(got - want) <= 1e-12 * max(1, want), (kp, kq, got)
    q = theory.CovarianceQuery(1, 1, 1, 0.5, 0.5, math.exp(-0.5), 1)
    assert abs(theory.covariance_series(q) - 2 * math.exp(-0.5) * 0.5) < 1e-14
    return len(cases) + 1


def _check_evaluators():
    n = 0
    worst_c = worst_l = 0.0
    for b_p, b_q, b_pq, c in theory.agreement_grid()[::6]:
        for beta in (1, 2):
            block = theory.logkernel_block(4, b_p, b_q, b_pq, c, beta)
            for kp in range(1, 5):
                for kq in range(1, 5):
                    q = theory.CovarianceQuery(kp, kq, b_p, b_q, b_pq, c, beta)
                    s = theory.covariance_series(q)
                    scale = max(abs(s), 1e-300)
                    worst_c = max(worst_c, abs(theory.covariance_contour(q) - s) / scale if s else
                                  abs(theory.covariance_contour(q)))
                    worst_l = max(worst_l, abs(block[kp - 1, kq - 1] - s) / scale if s else
                                  abs(block[kp - 1, kq - 1]))
                    n += 1
    assert worst_c <= 1e-8 and worst_l <= 1e-5, (worst_c, worst_l)
    return n


def _check_chebyshev():
    n = 0
    for kp in range(1, 5):
        for kq in range(1, 5):
            for geom in ((1, 1, 1, 1), (1, 0.5, 0.5, 0.6), (0.7, 0.4, 0.2, 0.3)):
                a = theory.chebyshev_covariance_closed(kp, kq, *geom, 1)
                b = theory.chebyshev_covariance_expanded(kp, kq, *geom, 1)
                assert abs(a - b) <= 1e-12 * max(1, abs(a)), (kp, kq, geom, a, b)
                n += 1
    return n


def _check_kernel():
    rng = np.random.default_rng(0)
    z = rng.uniform(-2, 2, 1000) + 1j * rng.uniform(0.05, 2, 1000)
    w = rng.uniform(-2, 2, 1000) + 1j * rng.uniform(0.05, 2, 1000)
    one = Constant(1.0)
    diff = np.abs(kernel.kernel_C(z, 0.0, w, 0.0, one) - kernel.green_halfplane(z, w))
    assert diff.max() <= 1e-12
    ou = OrnsteinUhlenbeck(1.0)
    sec = kernel.SectionSpec(kernel.profile_from_dict({"kind": "exponential", "rate": -1.0}),
                             kernel.profile_from_dict({"kind": "linear", "slope": 1.0}), 0.0, ou)
    pairs = [((0.3, 0.2), (-0.4, 0.9)), ((0.0, -0.5), (0.5, 0.5)), ((1.0, 0.1), (0.2, 0.1))]
    res = kernel.section_pullback_check(sec, pairs)
    assert res.applicable and res.max_discrepancy <= 1e-10
    pts = [(complex(x, y), s) for x, y, s in rng.uniform([-1, 0.5, 0], [1, 1.5, 1], (6, 3))]
    assert kernel.gram_pd_check(pts, ou, 0.1) >= -1e-9
    return len(z) + len(pairs) + 1


SELFTESTS = (
    ("exact combinatorics", _check_combinatorics),
    ("series reference values", _check_series_values),
    ("series/contour/log-kernel agreement", _check_evaluators),
    ("Chebyshev closed vs expanded", _check_chebyshev),
    ("kernel identities", _check_kernel),
)


def cmd_selftest(args, cfg):
    failures = total = 0
    t0 = time.perf_counter()
    for name, fn in SELFTESTS:
        try:
            n = fn()
            total += n
            print(f"ok    {name}: {n} identities")
        except AssertionError as exc:
            failures += 1
            print(f"FAIL  {name}: {exc}")
    print(f"selftest: {total} identities checked, {failures} group(s) failed, "
          f"{time.perf_counter() - t0:.1f} s")
    return EXIT_OK if failures == 0 else EXIT_VERDICT


COMMANDS = {
    "theory": cmd_theory,
    "simulate": cmd_simulate,
    "compare": cmd_compare,
    "kernel": cmd_kernel,
    "selftest": cmd_selftest,
}


def main(argv=None):
    try:
        args, cfg = parse_and_validate(argv)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.command != "selftest":
        Path(args.out).mkdir(parents=True, exist_ok=True)
    try:
        return COMMANDS[args.command](args, cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except DysonCLTError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
