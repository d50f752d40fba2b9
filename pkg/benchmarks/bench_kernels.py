"""Time the compiled and pure-Python coordinate-descent kernels.

Usage: python benchmarks/bench_kernels.py [--repeat N]

Each case fits one lasso from a cold start through ``fit_lasso`` with the
kernel swapped in, and also checks that both backends return the same
coefficients.
"""
import argparse
import time

import numpy as np

from naivelasso import _kernels
from naivelasso.lasso import fit_lasso, lambda_max
from naivelasso.model import standardize

CASES = [(100, 50, 0.1), (300, 100, 0.05), (200, 500, 0.1), (1000, 200, 0.02)]


def make_case(n, p, seed=0):
    rng = np.random.default_rng(seed)
    design, _, _ = standardize(rng.standard_normal((n, p)))
    beta = np.zeros(p)
    beta[:5] = [2.0, -1.5, 1.0, 0.5, -0.5]
    y = design.X @ beta + rng.standard_normal(n)
    return design, y - y.mean()


def time_backend(name, design, y, lam, repeat):
    original = _kernels.cd_lasso
    _kernels.cd_lasso = _kernels.BACKENDS[name]
    try:
        best = np.inf
        for _ in range(repeat):
            t0 = time.perf_counter()
            fit = fit_lasso(design, y, lam)
            best = min(best, time.perf_counter() - t0)
    finally:
        _kernels.cd_lasso = original
    return best, fit


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args(argv)
    names = sorted(_kernels.BACKENDS)
    print(f"default backend: {_kernels.BACKEND}; available: {', '.join(names)}")
    header = f"{'n':>6} {'p':>6} {'lam/lmax':>9} " + " ".join(f"{n + ' ms':>12}" for n in names)
    if len(names) > 1:
        header += f" {'speedup':>8} {'max|diff|':>10}"
    print(header)
    for n, p, frac in CASES:
        design, y = make_case(n, p)
        lam = frac * lambda_max(design, y)
        results = {name: time_backend(name, design, y, lam, args.repeat) for name in names}
        line = f"{n:>6} {p:>6} {frac:>9.3g} " + " ".join(
            f"{results[name][0] * 1e3:>12.3f}" for name in names)
        if len(names) > 1:
            speed = results["python"][0] / results["cython"][0]
            diff = np.abs(results["python"][1].beta - results["cython"][1].beta).max()
            line += f" {speed:>8.1f} {diff:>10.2e}"
        print(line)


if __name__ == "__main__":
    main()
