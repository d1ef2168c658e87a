"""Compare the compiled kernels against the pure-Python reference.

    python3 benchmarks/bench_kernels.py [--quick]

Each kernel runs on identical inputs in both backends; outputs are checked
for bit equality before timings are reported.
"""

import argparse
import time

import numpy as np

from pcbound import _backend
from pcbound.certified import mean_drift_value
from pcbound.imc import build_chain


def timed(fn, repeat=1):
    best = float("inf")
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def same(a, b):
    if isinstance(a, tuple):
        return all(same(x, y) for x, y in zip(a, b))
    if isinstance(a, np.ndarray):
        return np.array_equal(a, b)
    return a == b


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--quick", action="store_true")
    args = ap.parse_args()
    pure, comp = _backend.pure, _backend.compiled
    if comp is None:
        raise SystemExit("compiled kernels are not available; build with `pip install -e .`")
    steps = 20_000 if args.quick else 200_000
    order = 5 if args.quick else 7
    build_chain(order)
    cases = [
        (f"run_chain i=9 n={steps}", lambda k: k.run_chain(9, 0.63, steps, 7, [1] * 9, 100, True)),
        (f"one_step_counts i=3 n={steps}", lambda k: k.one_step_counts(3, 0.6, 5, steps, 3, 12)),
        (f"stationary solve + drift i={order}", lambda k: mean_drift_value(order, 0.37, backend=k)),
    ]
    print(f"{'kernel':<34} {'pure [s]':>10} {'compiled [s]':>13} {'speedup':>9}  equal")
    for name, fn in cases:
        tp, op = timed(lambda: fn(pure))
        tc, oc = timed(lambda: fn(comp), repeat=3)
        print(f"{name:<34} {tp:>10.3f} {tc:>13.4f} {tp / tc:>8.0f}x  {same(op, oc)}")


if __name__ == "__main__":
    main()
