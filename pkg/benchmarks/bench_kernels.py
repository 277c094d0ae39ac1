#!/usr/bin/env python3
"""Benchmark the hot kernels on both backends (numpy vs numba).

Usage: python benchmarks/bench_kernels.py [--repeats N]
"""

import argparse
import time

import numpy as np

from bandmask import imaging, kernels


def time_call(fn, *args, repeats=20):
    fn(*args)  # warm-up (JIT compile on the numba path)
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--repeats", type=int, default=20)
    args = parser.parse_args()

    rng = np.random.default_rng(0)
    img = rng.random((384, 512, 3))
    sv, wv = imaging.resample_coeffs(384, 256)
    sh, wh = imaging.resample_coeffs(512, 341)
    gray = rng.random((224, 224))
    field = rng.normal(0, 0.16, (224, 224)).clip(-1, 1)

    cases = [
        ("resample 384x512x3 -> 256x341", kernels.resample_2d, (img, sv, wv, sh, wh)),
        ("gray+contrast 384x512", kernels.rgb_to_gray_contrast, (img, 0.299, 0.587, 0.114, 0.2, 0.5)),
        ("clip_adjust 224x224", kernels.clip_adjust, (gray, field)),
        ("radial_annulus 224", kernels.radial_annulus, (224, 19.8, 39.6)),
    ]

    results = {}
    for backend in ("numpy", "numba"):
        kernels.use(backend)
        for name, fn, call_args in cases:
            results[(name, backend)] = time_call(fn, *call_args, repeats=args.repeats)

    print(f"{'kernel':<34} {'numpy':>10} {'numba':>10} {'speedup':>8}")
    for name, _, _ in cases:
        t_np = results[(name, "numpy")]
        t_nb = results[(name, "numba")]
        print(f"{name:<34} {t_np * 1e3:>8.3f}ms {t_nb * 1e3:>8.3f}ms {t_np / t_nb:>7.2f}x")


if __name__ == "__main__":
    main()
