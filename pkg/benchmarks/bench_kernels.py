"""Compare the compiled and pure-Python simplex kernels.

    python benchmarks/bench_kernels.py [--repeat 5] [--sizes 50,200,800]

Prints one row per case with the best time for each backend and the speedup.
Kernel primitives run on random dense tableaux; the end-to-end cases solve
the bundled scenarios with presolve off, so the LPs keep every column.
"""

import argparse
import timeit

import numpy as np

from fleetbalance.milp import build_ilp1, build_ilp2
from fleetbalance.scenario import bundled_scenario
from fleetbalance.solver import kernels, solve


def _tableau(rng, m, n):
    T = rng.normal(size=(m + 1, n + 1))
    basis = rng.choice(n, size=m, replace=False).astype(np.int64)
    status = rng.integers(0, 3, size=n).astype(np.int8)
    status[basis] = 0
    x = rng.uniform(0, 1, size=n)
    lb = np.zeros(n)
    ub = np.where(rng.random(n) < 0.5, 1.0, np.inf)
    return T, basis, status, x, lb, ub


def primitive_cases(sizes, seed):
    rng = np.random.default_rng(seed)
    for m in sizes:
        n = 3 * m
        T, basis, status, x, lb, ub = _tableau(rng, m, n)
        d = T[-1, :n].copy()

        def pivot(k, T=T, m=m, n=n):
            W = T.copy()
            k.pivot(W, m // 2, n // 2)

        def price(k, d=d, status=status):
            k.price(d, status, 1e-9, False)

        def ratio(k, T=T, x=x, lb=lb, ub=ub, basis=basis, n=n):
            k.ratio_test(T, n // 3, 1, x, lb, ub, basis, 1e-9, 1e-9)

        yield f"pivot {m}x{n}", pivot
        yield f"price n={n}", price
        yield f"ratio_test m={m}", ratio


def solve_cases():
    s1 = bundled_scenario("scenario1")
    s2 = bundled_scenario("scenario2")
    models = {
        "scenario1 staff-only": build_ilp1(s1),
        "scenario1 incentives": build_ilp2(s1, (1, 1, 2)),
        "scenario2 incentives": build_ilp2(s2, (1, 1, 2)),
    }
    for name, model in models.items():

        def run(k, model=model):
            saved = kernels.default
            kernels.default = k
            try:
                solve(model, presolve=False)
            finally:
                kernels.default = saved

        yield f"solve {name}", run


def best_time(fn, k, repeat):
    number = 1
    # grow the loop count until one timing takes about 50 ms
    while timeit.timeit(lambda: fn(k), number=number) < 0.05 and number < 100_000:
        number *= 4
    return min(timeit.repeat(lambda: fn(k), number=number, repeat=repeat)) / number


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--sizes", default="50,200,800", help="tableau row counts for the primitive cases")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--skip-solve", action="store_true", help="only time the primitives")
    args = ap.parse_args(argv)

    if kernels.compiled_kernels is None:
        print("compiled kernels are not built; run `pip install -e . --no-build-isolation` with Cython available")
        return 1
    sizes = [int(v) for v in args.sizes.split(",")]
    cases = list(primitive_cases(sizes, args.seed))
    if not args.skip_solve:
        cases += list(solve_cases())

    print(f"{'case':<30} {'python':>12} {'compiled':>12} {'speedup':>8}")
    for name, fn in cases:
        py = best_time(fn, kernels.python_kernels, args.repeat)
        cc = best_time(fn, kernels.compiled_kernels, args.repeat)
        print(f"{name:<30} {py * 1e6:>10.1f}us {cc * 1e6:>10.1f}us {py / cc:>7.2f}x")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
