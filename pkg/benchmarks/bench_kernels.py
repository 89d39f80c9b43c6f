"""Numba vs numpy timings for the two hot kernels.

    python3 benchmarks/bench_kernels.py [--repeat 5]

Both backends are imported directly, so the ``PLSLAB_DISABLE_NUMBA`` flag does
not matter here.  The first numba call (compilation) is excluded.
"""

import argparse
import timeit

import numpy as np

from plslab import kernels


def subset_case(n, size, seed=0):
    rng = np.random.default_rng(seed)
    w = rng.exponential(size=n)
    costs = np.floor(w / w.sum() * size).astype(np.int64)
    return costs, w, int(costs.sum()) + 1


def toeplitz_case(m, t, seed=0):
    rng = np.random.default_rng(seed)
    return (rng.integers(0, 2, m, dtype=np.uint8), rng.integers(0, 2, m + t - 1, dtype=np.uint8), t)


def bench(fn, args, repeat):
    fn(*args)  # warm-up / compile
    return min(timeit.repeat(lambda: fn(*args), number=1, repeat=repeat))


def main(argv=None):
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)

    cases = [
        ("subset_extremes N=16 size=2e4", kernels.subset_extremes_numba,
         kernels.subset_extremes_numpy, subset_case(16, 20_000)),
        ("subset_extremes N=64 size=1.4e5", kernels.subset_extremes_numba,
         kernels.subset_extremes_numpy, subset_case(64, 140_000)),
        ("toeplitz_hash m=1024 t=256", kernels.toeplitz_hash_numba,
         kernels.toeplitz_hash_numpy, toeplitz_case(1024, 256)),
        ("toeplitz_hash m=8192 t=2048", kernels.toeplitz_hash_numba,
         kernels.toeplitz_hash_numpy, toeplitz_case(8192, 2048)),
    ]
    print(f"{'case':34s} {'numba ms':>10s} {'numpy ms':>10s} {'speedup':>8s}")
    for name, fast, slow, case in cases:
        a = fast(*case)
        b = slow(*case)
        for x, y in zip(a if isinstance(a, tuple) else (a,), b if isinstance(b, tuple) else (b,)):
            if not np.array_equal(x, y):
                raise SystemExit(f"{name}: backends disagree")
        t_fast = bench(fast, case, args.repeat)
        t_slow = bench(slow, case, args.repeat)
        print(f"{name:34s} {t_fast * 1e3:10.2f} {t_slow * 1e3:10.2f} {t_slow / t_fast:8.1f}x")


if __name__ == "__main__":
    main()
