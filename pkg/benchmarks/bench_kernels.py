"""Time the compiled kernels against the numpy fallback.

Usage: python benchmarks/bench_kernels.py [--repeats 5]
"""

import argparse
import timeit

import numpy as np

from survmixclust import _pykernels

try:
    from survmixclust import _kernels as _cykernels
except ImportError:
    _cykernels = None


def density_case(rng, n_query, n_centers, scale=3.0):
    centers = np.sort(rng.exponential(scale, n_centers))
    weights = rng.random(n_centers) / n_centers
    query = rng.exponential(scale, n_query)
    return (query, centers, weights, 0.3)


def concordance_case(rng, n, grid_size):
    values = np.ascontiguousarray(np.exp(-np.cumsum(rng.random((n, grid_size)) * 0.05, axis=1)))
    times = rng.exponential(3.0, n)
    grid = np.sort(times)[:: max(1, n // grid_size)][:grid_size]
    cols = (np.searchsorted(grid, times, side="right") - 1).astype(np.int64)
    events = (rng.random(n) < 0.7).astype(np.uint8)
    return (values, cols, times, events)


def run(repeats):
    rng = np.random.default_rng(0)
    cases = [
        ("gaussian_kernel_sum 2000 x 300", "gaussian_kernel_sum", density_case(rng, 2000, 300)),
        ("gaussian_kernel_sum 20000 x 1500", "gaussian_kernel_sum", density_case(rng, 20000, 1500)),
        ("gaussian_kernel_sum wide 20000 x 1500", "gaussian_kernel_sum", density_case(rng, 20000, 1500, 300.0)),
        ("concordance_counts n=1000", "concordance_counts", concordance_case(rng, 1000, 500)),
        ("concordance_counts n=4000", "concordance_counts", concordance_case(rng, 4000, 1000)),
    ]
    print(f"{'kernel':40s} {'python (s)':>11s} {'cython (s)':>11s} {'speedup':>8s}")
    for label, name, args in cases:
        py = min(timeit.repeat(lambda: getattr(_pykernels, name)(*args), number=1, repeat=repeats))
        if _cykernels is None:
            print(f"{label:40s} {py:11.4f} {'n/a':>11s} {'n/a':>8s}")
            continue
        cy = min(timeit.repeat(lambda: getattr(_cykernels, name)(*args), number=1, repeat=repeats))
        print(f"{label:40s} {py:11.4f} {cy:11.4f} {py / cy:7.1f}x")


if __name__ == "__main__":
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeats", type=int, default=5)
    run(parser.parse_args().repeats)
