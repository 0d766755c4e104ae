"""Compare the numba and numpy implementations of every hot kernel.

    python3 benchmarks/bench_kernels.py [--repeat 5]

Each kernel is run once untimed on both backends (numba compiles or loads its
cache there), then timed as the best of ``--repeat`` calls.
"""

import argparse
import time

import numpy as np

from qbath import kernels


def best_of(fn, repeat):
    fn()
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def cases():
    gen = np.random.default_rng(0)
    normals = gen.standard_normal((200_000, 8, 2))
    energies = np.linspace(0.0, 3.0, 8)
    steps = np.array([0, 1, 3, 7], dtype=np.int64)
    log_w = np.log(np.array([0.4, 0.3, 0.2, 0.1]))
    knots = np.array([0.0, 0.5, 0.5, 1.2, 2.0, 2.1, 3.0])
    x = np.linspace(0.0, 3.0, 500_000)
    sums = gen.normal(60.0, 7.0, 2_000_000)
    return {
        "haar_energies (200k x r=8)": lambda impl: impl.haar_energies(normals, energies),
        "lattice_log_pmf (n=2000, cap=4000)": lambda impl: impl.lattice_log_pmf(steps, log_w,
                                                                                2000, 4000),
        "bspline_basis (500k pts, 7 knots)": lambda impl: impl.bspline_basis(x, knots),
        "weighted_band_stats (2M sums)": lambda impl: impl.weighted_band_stats(sums, 40.0, 60.0,
                                                                               0.8, 60.0),
    }


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args()
    if kernels.numba_impl is None:
        raise SystemExit("numba is not importable; nothing to compare")
    print(f"{'kernel':<38} {'numpy [ms]':>11} {'numba [ms]':>11} {'speedup':>8}")
    for name, call in cases().items():
        t_np = best_of(lambda: call(kernels.numpy_impl), args.repeat)
        t_nb = best_of(lambda: call(kernels.numba_impl), args.repeat)
        print(f"{name:<38} {1e3 * t_np:>11.2f} {1e3 * t_nb:>11.2f} {t_np / t_nb:>7.1f}x")


if __name__ == "__main__":
    main()
