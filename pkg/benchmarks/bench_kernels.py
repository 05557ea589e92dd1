#!/usr/bin/env python3
"""Benchmark the numba kernels against the pure-numpy fallback.

Times each per-mode kernel on a synthetic flat mode set of the size a large
production grid would use.  Run directly:

    python benchmarks/bench_kernels.py [--n 2000000] [--repeats 5]

The same comparison is available end to end by setting
ROTCOUETTE_DISABLE_NUMBA=1 and rerunning any simulation.
"""

import argparse
import time

import numpy as np

from rotcouette import _kernels


def time_fn(fn, args, repeats):
    fn(*args)  # warm-up (and numba compilation)
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=2_000_000, help="modes per call")
    ap.add_argument("--repeats", type=int, default=5)
    args = ap.parse_args()

    if not _kernels.HAVE_NUMBA:
        print("numba is not importable; only the numpy path is available")
        return

    rng = np.random.default_rng(0)
    k = rng.integers(-8, 9, args.n).astype(float)
    eta = rng.uniform(-50.0, 50.0, args.n)
    l = rng.integers(-8, 9, args.n).astype(float)
    t, nu, window = 7.3, 1e-3, 1000.0

    cases = [
        ("w", _kernels.w_values_nb, _kernels.w_values_np, (t, k, eta, l)),
        ("integral_w", _kernels.integral_w_values_nb, _kernels.integral_w_values_np,
         (t, k, eta, l, 1.0)),
        ("m", _kernels.m_values_nb, _kernels.m_values_np, (t, k, eta, l, nu, window)),
        ("M", _kernels.M_values_nb, _kernels.M_values_np, (t, k, eta, l, nu)),
        ("neg_MdotM", _kernels.neg_MdotM_values_nb, _kernels.neg_MdotM_values_np,
         (t, k, eta, l, nu)),
    ]

    print(f"n = {args.n} modes, best of {args.repeats}")
    print(f"{'kernel':<12} {'numba [ms]':>12} {'numpy [ms]':>12} {'speedup':>9} {'max|diff|':>11}")
    for name, nb, np_, call in cases:
        t_nb = time_fn(nb, call, args.repeats) * 1e3
        t_np = time_fn(np_, call, args.repeats) * 1e3
        diff = float(np.max(np.abs(nb(*call) - np_(*call))))
        print(f"{name:<12} {t_nb:>12.2f} {t_np:>12.2f} {t_np / t_nb:>8.1f}x {diff:>11.2e}")


if __name__ == "__main__":
    main()
