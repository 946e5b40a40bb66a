"""Time the compiled kernels against the pure-Python fallback.

    python benchmarks/bench_kernels.py [--repeat 5] [--n 4000]

Each kernel runs on identical inputs under both backends; outputs are
checked for equality before timings are reported.
"""
from __future__ import annotations

import argparse
import timeit

import numpy as np

from pubcausal import _kernels_py

try:
    from pubcausal import _kernels
except ImportError:  # extension not built
    _kernels = None


def _tree_inputs(n, rng):
    X = rng.normal(size=(n, 14))
    t = (rng.random(n) < 0.5).astype(np.int8)
    y = 2.0 * t + X[:, 0] + rng.normal(size=n)
    idx = rng.permutation(n)
    return X, t, y, np.sort(idx[: n // 2]), np.sort(idx[n // 2:])


def _match_inputs(n, rng):
    return rng.normal(size=n // 2), rng.normal(size=n), 0.05


def _ccdr_inputs(p, rng):
    B = np.triu(rng.uniform(0.5, 1.0, (p, p)) * (rng.random((p, p)) < 0.3), 1)
    X = rng.normal(size=(2000, p)) @ np.linalg.inv(np.eye(p) - B)
    X = (X - X.mean(0)) / X.std(0)
    return (X.T @ X / len(X), 0.05)


def _same(a, b):
    if isinstance(a, tuple):
        return len(a) == len(b) and all(_same(x, y) for x, y in zip(a, b))
    if isinstance(a, np.ndarray):
        return np.array_equal(a, b)
    return a == b


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--n", type=int, default=4000, help="rows for the tree and matching kernels")
    ap.add_argument("--p", type=int, default=20, help="variables for the CCDr kernel")
    args = ap.parse_args(argv)
    if _kernels is None:
        print("compiled extension not available; build it with `pip install -e . --no-build-isolation`")
        return 1

    rng = np.random.default_rng(0)
    cases = [
        ("grow_tree", _tree_inputs(args.n, rng)),
        ("greedy_match", _match_inputs(args.n, rng)),
        ("ccdr_cd", _ccdr_inputs(args.p, rng)),
    ]
    print(f"{'kernel':<14}{'cython (ms)':>13}{'python (ms)':>13}{'speedup':>10}  outputs")
    for name, inputs in cases:
        fast, slow = getattr(_kernels, name), getattr(_kernels_py, name)
        same = _same(fast(*inputs), slow(*inputs))
        t_fast = min(timeit.repeat(lambda: fast(*inputs), number=1, repeat=args.repeat)) * 1e3
        t_slow = min(timeit.repeat(lambda: slow(*inputs), number=1, repeat=args.repeat)) * 1e3
        print(f"{name:<14}{t_fast:>13.2f}{t_slow:>13.2f}{t_slow / t_fast:>9.1f}x  {'identical' if same else 'DIFFER'}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
