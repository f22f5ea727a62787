"""Compare the compiled kernels against the pure-Python fallback.

Times the two hot paths (random-forest tree growth and hinge-loss SGD)
through their public trainers under each backend and prints a table.

Usage:
    python3 benchmarks/bench_backends.py [--trees 20] [--epochs 5] [--repeat 3]
"""

from __future__ import annotations

import argparse
import time

import numpy as np
from scipy import sparse

from uttlabel._kernels import available_backends, use_backend
from uttlabel.learners.forest import train_random_forest
from uttlabel.learners.linear import train_sgd_svm


def make_dataset(n: int, d: int, density: float, seed: int):
    rng = np.random.default_rng(seed)
    mask = rng.random((n, d)) < density
    X = sparse.csr_matrix(np.where(mask, rng.random((n, d)), 0.0))
    centers = rng.integers(0, 2, size=d) * 0.8
    scores = X @ centers
    y = ["pos" if s > float(np.median(scores)) else "neg" for s in scores]
    return X, y


def timed(fn, repeat: int) -> float:
    best = float("inf")
    for _ in range(repeat):
        start = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - start)
    return best


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--rows", type=int, default=2000)
    parser.add_argument("--cols", type=int, default=300)
    parser.add_argument("--density", type=float, default=0.05)
    parser.add_argument("--trees", type=int, default=20)
    parser.add_argument("--epochs", type=int, default=5)
    parser.add_argument("--repeat", type=int, default=3)
    args = parser.parse_args()

    X, y = make_dataset(args.rows, args.cols, args.density, seed=0)
    workloads = {
        "random forest": lambda: train_random_forest(
            X, y, n_trees=args.trees, seed=1
        ),
        "gd-svm": lambda: train_sgd_svm(X, y, epochs=args.epochs, seed=1),
    }

    backends = [name for name, ok in available_backends().items() if ok]
    print(
        f"dataset: {args.rows} x {args.cols} at density {args.density}, "
        f"{args.trees} trees, {args.epochs} epochs, best of {args.repeat}"
    )
    results: dict[str, dict[str, float]] = {}
    for backend in backends:
        with use_backend(backend):
            results[backend] = {
                name: timed(fn, args.repeat) for name, fn in workloads.items()
            }

    header = f"{'workload':<16}" + "".join(f"{b:>12}" for b in backends)
    if len(backends) > 1:
        header += f"{'speedup':>10}"
    print(header)
    for name in workloads:
        line = f"{name:<16}"
        for backend in backends:
            line += f"{results[backend][name]:>11.3f}s"
        if len(backends) > 1:
            ratio = results["python"][name] / results["compiled"][name]
            line += f"{ratio:>9.1f}x"
        print(line)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
