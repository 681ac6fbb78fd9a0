"""Time each numeric kernel on every available backend.

Run from the repository root:

    python3 benchmarks/bench_kernels.py
    python3 benchmarks/bench_kernels.py --features 18 --repeats 7
"""

import argparse
import time

import numpy as np

from shapattr import kernels, shapley_weights


def best_of(fn, repeats: int) -> float:
    best = float("inf")
    for _ in range(repeats):
        start = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - start)
    return best


def bench_sweep(n: int, n_metrics: int, rng) -> dict:
    values = rng.standard_normal((1 << n, n_metrics))
    weights = shapley_weights(n)
    pc = kernels.popcounts(n)
    return {
        "name": f"shapley_sweep (n={n}, {n_metrics} metrics)",
        "fn": lambda: kernels.shapley_sweep(values, weights, pc, n),
    }


def bench_walk(n: int, n_paths: int, rng) -> dict:
    values = rng.standard_normal((1 << n, 2))
    perms = np.argsort(rng.random((n_paths, n)), axis=1).astype(np.int64)
    return {
        "name": f"permutation_walk (n={n}, {n_paths} paths)",
        "fn": lambda: kernels.permutation_walk(values, perms),
    }


def bench_rebalance(periods: int, assets: int, rng) -> dict:
    bench0 = rng.uniform(0.5, 1.5, assets)
    bench0 /= bench0.sum()
    rets = 0.01 * rng.standard_normal((periods, assets))
    delta = 0.002 * rng.standard_normal((periods, assets))
    return {
        "name": f"rebalance_path ({periods} periods, {assets} assets)",
        "fn": lambda: kernels.rebalance_path(bench0, rets, delta, 0.25, True),
    }


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--features", type=int, default=16, help="sweep/walk size")
    parser.add_argument("--paths", type=int, default=2000, help="permutation paths")
    parser.add_argument("--periods", type=int, default=5000)
    parser.add_argument("--assets", type=int, default=100)
    parser.add_argument("--repeats", type=int, default=5, help="best-of repeats")
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    rng = np.random.default_rng(args.seed)
    cases = [
        bench_sweep(args.features, 3, rng),
        bench_walk(min(args.features, 12), args.paths, rng),
        bench_rebalance(args.periods, args.assets, rng),
    ]
    backends = kernels.available_backends()
    print(f"backends: {', '.join(backends)} (active: {kernels.active_backend()})")
    print(f"timings: best of {args.repeats}\n")

    width = max(len(c["name"]) for c in cases)
    header = "kernel".ljust(width) + "".join(f"  {b:>12}" for b in backends)
    if len(backends) > 1:
        header += f"  {'speedup':>9}"
    print(header)
    print("-" * len(header))
    for case in cases:
        times = {}
        for backend in backends:
            previous = kernels.use_backend(backend)
            try:
                case["fn"]()  # warm up: JIT compile outside the timing
                times[backend] = best_of(case["fn"], args.repeats)
            finally:
                kernels.use_backend(previous)
        line = case["name"].ljust(width)
        line += "".join(f"  {times[b] * 1e3:>10.3f}ms" for b in backends)
        if "numba" in times and "numpy" in times:
            line += f"  {times['numpy'] / times['numba']:>8.1f}x"
        print(line)


if __name__ == "__main__":
    main()
