"""Compiled vs pure-Python kernels: GF(2) boundary reduction and Jacobi sweeps.

    python3 benchmarks/bench_kernels.py [--grid 24] [--size 80] [--repeat 3] [--json out.json]
"""
import argparse
import json
import time

import numpy as np

from wittenlab import _fallback
from wittenlab.field import GridTopology, SampledField
from wittenlab.persistence import build_filtration, gf2_columns

try:
    from wittenlab import _kernels
except ImportError:
    _kernels = None


def boundary_csc(n, seed):
    rng = np.random.default_rng(seed)
    fld = SampledField(GridTopology.torus(n, n), rng.standard_normal(n * n))
    return gf2_columns(build_filtration(fld))


def best_of(fn, repeat):
    out = []
    for _ in range(repeat):
        t = time.perf_counter()
        fn()
        out.append(time.perf_counter() - t)
    return min(out)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--grid", type=int, default=24, help="torus side for the reduction benchmark")
    ap.add_argument("--size", type=int, default=80, help="matrix side for the Jacobi benchmark")
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--json")
    args = ap.parse_args(argv)

    indptr, indices, ncols = boundary_csc(args.grid, args.seed)
    A0 = np.random.default_rng(args.seed).standard_normal((args.size, args.size))
    tol = args.size * np.finfo(float).eps

    def jac(mod):
        A = np.asfortranarray(A0.copy())
        V = np.asfortranarray(np.eye(args.size))
        return mod.jacobi_sweeps(A, V, tol, 60)

    rows = []
    impls = [("python", _fallback)] + ([("cython", _kernels)] if _kernels else [])
    ref_low = _fallback.reduce_gf2(indptr, indices, ncols)
    for name, mod in impls:
        same = bool(np.array_equal(np.asarray(mod.reduce_gf2(indptr, indices, ncols)), ref_low))
        rows.append({"kernel": "reduce_gf2", "backend": name, "n_cols": ncols,
                     "seconds": best_of(lambda: mod.reduce_gf2(indptr, indices, ncols), args.repeat),
                     "matches_python": same})
        rows.append({"kernel": "jacobi_sweeps", "backend": name, "n_cols": args.size,
                     "seconds": best_of(lambda: jac(mod), args.repeat), "sweeps": int(jac(mod))})
    base = {r["kernel"]: r["seconds"] for r in rows if r["backend"] == "python"}
    print(f"{'kernel':<15}{'backend':<9}{'size':>7}{'seconds':>12}{'speedup':>10}")
    for r in rows:
        r["speedup"] = base[r["kernel"]] / r["seconds"]
        print(f"{r['kernel']:<15}{r['backend']:<9}{r['n_cols']:>7}{r['seconds']:>12.4f}{r['speedup']:>10.1f}")
    if _kernels is None:
        print("compiled extension not built; only the fallback was timed")
    if args.json:
        with open(args.json, "w") as fh:
            json.dump(rows, fh, indent=1)


if __name__ == "__main__":
    main()
