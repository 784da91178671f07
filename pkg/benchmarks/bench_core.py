"""Compare the compiled and numpy entry-stream backends.

Run with ``python benchmarks/bench_core.py [--L 200] [--times 4] [--repeat 5]``.
Prints the best wall time per kernel for each available backend and the
speedup of the compiled core.
"""
import argparse
import timeit

import numpy as np

from dysonclt import _backend
from dysonclt.entry_process import EntryProcessSpec, OrnsteinUhlenbeck
from dysonclt.wigner import path_factors


def cases(L, n_times):
    labels = np.arange(1, L + 1, dtype=np.int64)
    grid = np.linspace(0.0, 1.0, n_times)
    rows = np.repeat(labels, L)
    cols = np.tile(labels, L)
    out = {}
    for beta, name in ((1, "assemble_real"), (2, "assemble_complex")):
        spec = EntryProcessSpec(beta=beta, covariance=OrnsteinUhlenbeck(1.0))
        f_off, f_diag = path_factors(spec, grid)
        out[name] = (lambda mod, name=name, fam=spec.kernel_family, fo=f_off, fd=f_diag:
                     getattr(mod, name)(12345, labels, fam, fo, fd))
    out["uniforms"] = lambda mod: mod.uniforms(12345, rows, cols, n_times)
    out["normals"] = lambda mod: mod.normals(12345, rows, cols, n_times)
    return out


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--L", type=int, default=200)
    ap.add_argument("--times", type=int, default=4)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    backends = {"python": _backend.python}
    if _backend.compiled is not None:
        backends["cython"] = _backend.compiled
    else:
        print("compiled core not built; timing the numpy fallback only")
    print(f"L={args.L}, {args.times} time nodes, best of {args.repeat}")
    print(f"{'kernel':<18}" + "".join(f"{b:>12}" for b in backends) + f"{'speedup':>10}")
    for name, fn in cases(args.L, args.times).items():
        best = {b: min(timeit.repeat(lambda: fn(mod), number=1, repeat=args.repeat))
                for b, mod in backends.items()}
        line = f"{name:<18}" + "".join(f"{best[b] * 1e3:>10.2f}ms" for b in backends)
        if "cython" in best:
            line += f"{best['python'] / best['cython']:>9.1f}x"
        print(line)


if __name__ == "__main__":
    main()
