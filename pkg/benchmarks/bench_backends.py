"""Timing comparison of the compiled quadrature kernel against the numpy
fallback on representative risk evaluations.

Run:  python benchmarks/bench_backends.py [--repeats 5]
"""

import argparse
import os
import statistics
import time

import bshrink._fastpath as fastpath
from bshrink.densities import kotz, normal, uniform_ball
from bshrink.estimators import BaranchikEstimator, constant_one, ratio
from bshrink.losses import BalancedLoss, builtin
from bshrink.risk import default_lambda_grid, risk_curve, risk_quadrature

CASES = [
    ("kotz d6 log1p rho, single lam=2",
     lambda: risk_quadrature(kotz(1, 1, 4, 6),
                             BalancedLoss("rho", 0.5, builtin("log1p")),
                             BaranchikEstimator(0.5, ratio(1.0)), 2.0)),
    ("normal d4 identity rho, single lam=1",
     lambda: risk_quadrature(normal(4),
                             BalancedLoss("rho", 0.0, builtin("identity")),
                             BaranchikEstimator(2.0, constant_one()), 1.0)),
    ("ball d4 power ell, single lam=1.5",
     lambda: risk_quadrature(uniform_ball(1.5, 4),
                             BalancedLoss("ell", 0.5, builtin("power", q=0.5)),
                             BaranchikEstimator(0.4, ratio(1.0)), 1.5)),
    ("kotz d6 log1p rho, 33-point curve",
     lambda: risk_curve(kotz(1, 1, 4, 6),
                        BalancedLoss("rho", 0.5, builtin("log1p")),
                        BaranchikEstimator(0.5, ratio(1.0)),
                        default_lambda_grid())),
]


def time_case(fn, repeats):
    fn()  # warm caches (Jacobi rules, truncation points)
    samples = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        samples.append(time.perf_counter() - t0)
    return min(samples), statistics.median(samples)


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--repeats", type=int, default=5)
    args = parser.parse_args()

    if not fastpath.HAVE_COMPILED:
        print("compiled kernel not built; only the python path is available")

    modes = ["python"] + (["compiled"] if fastpath.HAVE_COMPILED else [])
    print(f"{'case':45s} " + "  ".join(f"{m:>12s}" for m in modes) + "  speedup")
    for label, fn in CASES:
        results = {}
        for mode in modes:
            os.environ["BSHRINK_BACKEND"] = mode
            best, med = time_case(fn, args.repeats)
            results[mode] = med
        os.environ.pop("BSHRINK_BACKEND", None)
        cells = "  ".join(f"{results[m] * 1e3:9.2f} ms" for m in modes)
        if len(modes) == 2:
            cells += f"  {results['python'] / results['compiled']:6.1f}x"
        print(f"{label:45s} {cells}")


if __name__ == "__main__":
    main()
