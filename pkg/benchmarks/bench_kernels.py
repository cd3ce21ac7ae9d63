"""Timing comparison of the pure-numpy kernels vs the jitted ones.

Run:  python3 benchmarks/bench_kernels.py [--ticks 200000] [--repeat 5]

The jitted functions are compiled on first call; a warm-up round is
timed separately so the table shows steady-state throughput.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from gazerelay.kernels import reference

try:
    from gazerelay.kernels import accel
except ImportError:  # pragma: no cover - numba missing
    accel = None


def make_inputs(n: int, seed: int = 3):
    rng = np.random.default_rng(seed)
    ts = np.arange(n, dtype=np.float64) * 16.0
    xs = np.cumsum(rng.normal(0, 20.0, n)) + 960.0
    ys = np.cumsum(rng.normal(0, 20.0, n)) + 540.0
    # a 3+2 grid of central rects, roughly the 5-member default layout
    rects = np.array(
        [[100 + 620 * c, 80 + 520 * r, 420 + 620 * c, 340 + 520 * r]
         for r in range(2) for c in range(3)][:5],
        dtype=np.float64,
    )
    cand = rng.integers(-1, 5, n).astype(np.int64)
    return ts, xs, ys, rects, cand


def bench(fn, *args, repeat: int) -> float:
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--ticks", type=int, default=200_000)
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args()

    n = args.ticks
    ts, xs, ys, rects, cand = make_inputs(n)
    x1, y1, x2, y2 = (np.ascontiguousarray(rects[:, i]) for i in range(4))

    cases = [
        ("one_euro_trace", (ts, xs, ys, 0.3, 0.3, 1.0)),
        ("classify_trace", (xs, ys, x1, y1, x2, y2)),
        ("dwell_trace", (cand, ts, 100.0, -1)),
    ]

    print(f"{n} ticks per call, best of {args.repeat}\n")
    header = f"{'kernel':<16} {'numpy (ms)':>12} {'numba (ms)':>12} {'speedup':>9}"
    print(header)
    print("-" * len(header))
    for name, call_args in cases:
        ref_fn = getattr(reference, name)
        t_ref = bench(ref_fn, *call_args, repeat=args.repeat) * 1e3
        if accel is not None:
            acc_fn = getattr(accel, name)
            acc_fn(*call_args)  # warm-up: first call compiles
            t_acc = bench(acc_fn, *call_args, repeat=args.repeat) * 1e3
            out_ref = ref_fn(*call_args)
            out_acc = acc_fn(*call_args)
            if isinstance(out_ref, tuple):
                same = all(np.array_equal(a, b) for a, b in zip(out_ref, out_acc))
            else:
                same = np.array_equal(out_ref, out_acc)
            mark = "" if same else "  OUTPUT MISMATCH"
            print(f"{name:<16} {t_ref:>12.2f} {t_acc:>12.2f} "
                  f"{t_ref / t_acc:>8.1f}x{mark}")
        else:
            print(f"{name:<16} {t_ref:>12.2f} {'n/a':>12} {'n/a':>9}")


if __name__ == "__main__":
    main()
