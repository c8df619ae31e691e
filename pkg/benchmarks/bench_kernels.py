"""Benchmark the compiled kernels against the pure-Python fallback.

Times the three hot paths — single-lag correlation, the full lag sweep,
and one local-regression pass — on identical inputs for each backend and
prints a speedup table. The correlation results are also cross-checked so
a fast-but-wrong kernel cannot slip through.

Usage:
    python3 benchmarks/bench_kernels.py [--length 2000] [--max-lag 500]
                                        [--repeats 3]
"""

import argparse
import math
import struct
import time

import numpy as np

from striae.backend import get_backend


def _timed(fn, repeats):
    best = math.inf
    result = None
    for _ in range(repeats):
        t0 = time.perf_counter()
        result = fn()
        best = min(best, time.perf_counter() - t0)
    return best, result


def _fmt_seconds(seconds):
    if seconds >= 1.0:
        return f"{seconds:8.3f} s "
    if seconds >= 1e-3:
        return f"{seconds * 1e3:8.3f} ms"
    return f"{seconds * 1e6:8.3f} µs"


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--length", type=int, default=2000,
                        help="signal length in samples")
    parser.add_argument("--max-lag", type=int, default=500,
                        help="lag search bound for the sweep")
    parser.add_argument("--repeats", type=int, default=3,
                        help="timing repeats; the best run counts")
    args = parser.parse_args()

    rng = np.random.default_rng(20260819)
    x = rng.normal(size=args.length)
    y = np.concatenate([x[17:], rng.normal(size=17)])
    for arr in (x, y):
        arr[rng.choice(args.length, size=args.length // 20,
                       replace=False)] = np.nan
    min_overlap = max(3, args.length - args.max_lag)

    n_loess = 600
    xs = np.sort(rng.uniform(0.0, 100.0, size=n_loess))
    ys = np.sin(xs / 5.0) + 0.2 * rng.normal(size=n_loess)
    q = math.ceil(0.75 * n_loess)
    delta = np.ones(n_loess)

    backends = {}
    for name in ("compiled", "pure-python"):
        try:
            backends[name] = get_backend(name)
        except ImportError:
            print(f"note: {name} backend unavailable, skipping")
    if not backends:
        print("no backends importable")
        return 1

    cases = {
        "corr_at_lag (k=17)": lambda b: lambda: b.corr_at_lag_kernel(
            x, y, 17, min_overlap),
        f"lag_sweep (±{args.max_lag})": lambda b: lambda: b.lag_sweep_kernel(
            x, y, args.max_lag, min_overlap),
        f"loess_pass (n={n_loess})": lambda b: lambda: b.loess_pass(
            xs, ys, q, 2, delta),
    }

    print(f"signal length {args.length}, max lag {args.max_lag}, "
          f"best of {args.repeats} runs\n")
    header = f"{'kernel':<22}" + "".join(f"{n:>16}" for n in backends)
    if len(backends) == 2:
        header += f"{'speedup':>10}"
    print(header)
    print("-" * len(header))

    check_failures = 0
    for label, make in cases.items():
        times = {}
        results = {}
        for name, mod in backends.items():
            times[name], results[name] = _timed(make(mod), args.repeats)
        row = f"{label:<22}" + "".join(
            f"{_fmt_seconds(times[n]):>16}" for n in backends)
        if len(backends) == 2:
            ratio = times["pure-python"] / times["compiled"]
            row += f"{ratio:>9.1f}x"
            if "loess" not in label:
                a, b = results["compiled"], results["pure-python"]
                same = a[0] == b[0] and struct.pack("<d", a[1]) == \
                    struct.pack("<d", b[1]) and a[2:] == b[2:]
                if not same:
                    row += "  MISMATCH"
                    check_failures += 1
            else:
                diff = float(np.max(np.abs(results["compiled"]
                                           - results["pure-python"])))
                if diff > 1e-9:
                    row += f"  MISMATCH ({diff:.1e})"
                    check_failures += 1
        print(row)

    if check_failures:
        print(f"\n{check_failures} cross-check failure(s)")
        return 1
    if len(backends) == 2:
        print("\ncross-checks passed: correlation results bit-identical, "
              "smoothing within 1e-9")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
