"""Compare the compiled kernels against the numpy fallback.

Usage: python benchmarks/bench_kernels.py [--repeat 5] [--out bench.json]
"""

import argparse
import json
import timeit

import numpy as np

from respoisson import _kernels_py
from respoisson.specfun import gamma_derivative

try:
    from respoisson import _ckernels
except ImportError:  # extension not built
    _ckernels = None


def cases(rng):
    pts = rng.uniform(-1, 1, (20000, 3))
    gd = gamma_derivative((2, 1, 1))
    exps, coeffs, rpow = gd._exps, gd._coeffs, gd._rpow
    pexps = np.array([[i, j, k] for i in range(5) for j in range(5) for k in range(5)
                      if i + j + k <= 6], dtype=np.int64)
    pcoef = rng.standard_normal(len(pexps))
    t = rng.uniform(-1, 1, 20000)
    a = rng.uniform(0, 0.9, 20000)
    return {
        "poly_eval": lambda k: k.poly_eval(pts, pexps, pcoef),
        "radial_poly_eval": lambda k: k.radial_poly_eval(pts, exps, coeffs, rpow),
        "gegenbauer_table": lambda k: k.gegenbauer_table(12, 0.5, t),
        "gegenbauer_series": lambda k: k.gegenbauer_series(20, 0.5, t, a),
    }


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out", default=None)
    args = ap.parse_args(argv)
    rng = np.random.default_rng(args.seed)
    rows = []
    for name, fn in cases(rng).items():
        py = min(timeit.repeat(lambda: fn(_kernels_py), number=1, repeat=args.repeat))
        row = {"kernel": name, "python_s": py}
        if _ckernels is not None:
            cy = min(timeit.repeat(lambda: fn(_ckernels), number=1, repeat=args.repeat))
            diff = float(np.max(np.abs(np.asarray(fn(_ckernels)) - np.asarray(fn(_kernels_py)))))
            row.update(cython_s=cy, speedup=py / cy, max_abs_diff=diff)
        rows.append(row)
        print("  ".join(f"{k}={v:.3g}" if isinstance(v, float) else f"{k}={v}" for k, v in row.items()))
    if args.out:
        with open(args.out, "w") as fh:
            json.dump(rows, fh, indent=2)


if __name__ == "__main__":
    main()
