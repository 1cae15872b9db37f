"""Timing comparison of the compiled numeric kernels vs the numpy fallback.

Run:  python3 benchmarks/bench_kernels.py [--repeat N]
"""
from __future__ import annotations

import argparse
import time

import numpy as np

from pinview._native import fallback
from pinview.corpus.features import N_ZONES, zone_map

try:
    from pinview._native import _kernels as compiled
except ImportError:
    compiled = None


def _time(fn, *args, repeat: int = 5) -> float:
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def make_cases(seed: int = 0) -> list:
    rng = np.random.default_rng(seed)

    # 60 s of 50 Hz gaze samples wandering over a collage
    n = 3000
    t = np.arange(n, dtype=np.float64) * 20.0
    walk = np.cumsum(rng.normal(0.0, 8.0, size=(n, 2)), axis=0)
    x = np.asarray(640.0 + walk[:, 0], dtype=np.float64)
    y = np.asarray(384.0 + walk[:, 1], dtype=np.float64)

    # 512x512 image worth of edge codes and luminance
    h = w = 512
    zones = zone_map(h, w)
    codes = rng.integers(-1, 4, size=(h, w)).astype(np.int32)
    lum = rng.uniform(0.0, 100.0, size=(h, w))

    return [
        ("idt_windows (3000 samples)",
         lambda b: b.idt_windows(t, x, y, 30.0, 100.0)),
        ("cooccur_counts (512x512)",
         lambda b: b.cooccur_counts(codes, zones, N_ZONES)),
        ("brightness_counts (512x512)",
         lambda b: b.brightness_counts(lum, zones, N_ZONES, 8, -50.0, 50.0)),
    ]


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args()

    cases = make_cases()
    print(f"{'kernel':34s} {'fallback':>12s} {'compiled':>12s} {'speedup':>9s}")
    for name, call in cases:
        slow = _time(call, fallback, repeat=args.repeat)
        if compiled is None:
            print(f"{name:34s} {slow * 1e3:10.3f} ms {'(not built)':>12s}")
            continue
        fast = _time(call, compiled, repeat=args.repeat)
        print(f"{name:34s} {slow * 1e3:10.3f} ms {fast * 1e3:10.3f} ms "
              f"{slow / fast:8.1f}x")


if __name__ == "__main__":
    main()
