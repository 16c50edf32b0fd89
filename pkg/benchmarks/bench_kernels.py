"""Time the compiled kernels against the numpy fallback.

Usage: python3 benchmarks/bench_kernels.py [--repeat R] [--sizes 50,200,800]

Both implementations are imported directly, so the result does not
depend on ``ASYM_MMS_PURE_PYTHON``.  Outputs are compared before timing.
"""

import argparse
import timeit

import numpy as np

from asym_mms import _kernels_py

try:
    from asym_mms import _kernels
except ImportError:  # extension not built
    _kernels = None


def make_case(n, rng, k=6):
    X = rng.random((n, 2))
    D = np.linalg.norm(X[:, None] - X[None], axis=-1) * (1 + 0.5 * rng.random((n, n)))
    np.fill_diagonal(D, 0.0)
    order = np.argsort(D + D.T, axis=1)[:, 1:k + 1]
    indptr = np.arange(0, n * k + 1, k, dtype=np.intp)
    indices = np.ascontiguousarray(order.reshape(-1), dtype=np.intp)
    lengths = np.ascontiguousarray(D[np.repeat(np.arange(n), k), indices])
    f = rng.random(n)
    return D, indptr, indices, lengths, f


def calls(mod, case):
    D, indptr, indices, lengths, f = case
    m = np.ones(len(f))
    return {
        "floyd_warshall": lambda: mod.floyd_warshall(D),
        "neighbor_slopes": lambda: mod.neighbor_slopes(indptr, indices, lengths, f),
        "hopf_lax": lambda: mod.hopf_lax(D, f, 0.5, 2.0, 1e-12),
        "smoothed_cheeger": lambda: mod.smoothed_cheeger(indptr, indices, lengths, m, f, 2.0, 1e-2),
    }


def _first(x):
    return np.asarray(x[0] if isinstance(x, tuple) else x)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--sizes", default="50,200,800")
    args = ap.parse_args(argv)
    if _kernels is None:
        print("compiled extension not available; nothing to compare")
        return 1
    rng = np.random.default_rng(0)
    print(f"{'kernel':<18}{'n':>6}{'python [s]':>14}{'compiled [s]':>14}{'speedup':>10}")
    for n in (int(s) for s in args.sizes.split(",")):
        case = make_case(n, rng)
        py, cy = calls(_kernels_py, case), calls(_kernels, case)
        for name in py:
            if name == "floyd_warshall" and n > 400:
                continue
            a, b = _first(py[name]()), _first(cy[name]())
            assert np.allclose(a, b, rtol=1e-12, atol=1e-12), name
            tp = min(timeit.repeat(py[name], number=1, repeat=args.repeat))
            tc = min(timeit.repeat(cy[name], number=1, repeat=args.repeat))
            print(f"{name:<18}{n:>6}{tp:>14.3e}{tc:>14.3e}{tp / tc:>10.1f}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
