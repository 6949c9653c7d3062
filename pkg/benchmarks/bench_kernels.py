"""Time the compiled kernels against the numpy fallback.

Usage::

    python benchmarks/bench_kernels.py [--repeat 20]

Prints the median time per call for each kernel and backend, and the
speed-up of the compiled one. Results are also checked for agreement.
"""

import argparse
import timeit

import numpy as np

from lipbatch.kernels import available_backends


def make_case(n, m, d, k, seed=0):
    rng = np.random.default_rng(seed)
    X = rng.random((n, d))
    sq = ((X[:, None, :] - X[None, :, :]) ** 2).sum(-1)
    K = 1.3 * np.exp(-2.5 * sq) + 1e-6 * np.eye(n)
    L = np.ascontiguousarray(np.linalg.cholesky(K))
    alpha = np.linalg.solve(K, rng.standard_normal(n))
    Xq = rng.random((m, d))
    pen = (X[:k].copy(), rng.normal(size=k), rng.uniform(0.05, 1, k), rng.uniform(1, 20, k), 1.0)
    return Xq, X, alpha, L, pen


def calls(mod, case):
    Xq, X, alpha, L, pen = case
    return {
        "gp_predict": lambda: mod.gp_predict(Xq, X, alpha, L, 1.3, 2.5, True),
        "mean_grad_hess": lambda: mod.mean_grad_hess(Xq, X, alpha, 1.3, 2.5),
        "log_penalizers": lambda: mod.log_penalizers(Xq, *pen),
    }


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=20)
    ap.add_argument("--n", type=int, default=100, help="training points")
    ap.add_argument("--m", type=int, default=1000, help="query points")
    ap.add_argument("--d", type=int, default=5)
    ap.add_argument("--k", type=int, default=19, help="penalizer centers")
    args = ap.parse_args(argv)

    backends = available_backends()
    case = make_case(args.n, args.m, args.d, args.k)
    print(f"n={args.n} m={args.m} d={args.d} k={args.k}; backends: {', '.join(sorted(backends))}")
    results = {name: calls(mod, case) for name, mod in backends.items()}
    for kernel in results["python"]:
        times = {}
        for name, fns in results.items():
            fn = fns[kernel]
            fn()
            times[name] = np.median(timeit.repeat(fn, number=1, repeat=args.repeat))
        line = f"{kernel:16s}" + "".join(f"  {n}: {t * 1e3:8.3f} ms" for n, t in sorted(times.items()))
        if "cython" in times:
            out_c, out_p = results["cython"][kernel](), results["python"][kernel]()
            # summation order differs, so compare relative to each output's scale
            diff = max(np.abs(a - b).max() / max(np.abs(b).max(), 1e-300) for a, b in zip(out_c, out_p))
            line += f"  speed-up {times['python'] / times['cython']:5.1f}x  max rel diff {diff:.1e}"
        print(line)


if __name__ == "__main__":
    main()
