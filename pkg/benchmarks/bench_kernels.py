#!/usr/bin/env python3
"""Time the numba kernels against their numpy fallbacks.

Kernel inputs mimic one 512x512 image (CLAHE, GLCM, HOG) and one ELM fold
(rbf hidden layer, 270 x 168 against 350 centres). Each pair is checked for
agreement before timing. With --end-to-end the full extract_features call is
also timed in a fresh interpreter per backend, since the backend is fixed at
import time by COVELM_DISABLE_NUMBA.

    python3 benchmarks/bench_kernels.py [--repeat 5] [--end-to-end]
"""
import argparse
import os
import subprocess
import sys
import time

import numpy as np

from covelm import _kernels


def kernel_inputs(rng):
    img = rng.random((512, 512))
    bin_idx = np.minimum((img * 256).astype(np.int64), 255)
    edges = np.arange(0, 513, 64, dtype=np.int64)
    maps = rng.random((8, 8, 256))
    pos = np.arange(512)
    centres = (edges[:-1] + edges[1:] - 1) / 2
    lo = np.clip(np.searchsorted(centres, pos, side="right") - 1, 0, 7).astype(np.int64)
    hi = np.minimum(lo + 1, 7).astype(np.int64)
    wt = np.clip((pos - centres[lo]) / 64.0, 0.0, 1.0)
    q = np.minimum((img * 32).astype(np.int64), 31)
    ang = rng.random((512, 512)) * 9
    bin_lo = np.floor(ang).astype(np.int64) % 9
    frac = ang - np.floor(ang)
    X = rng.normal(size=(270, 168))
    A = rng.uniform(-1, 1, size=(350, 168))
    b = rng.uniform(0, 1, size=350) / 168
    return {
        "tile_histograms": (bin_idx, edges, edges, 256),
        "clahe_interpolate": (bin_idx, maps, lo, hi, wt, lo, hi, wt),
        "cooccurrence": (q, -1, 1, 32),
        "cell_histograms": (img, bin_lo, frac, 16, 16, 32, 32, 9),
        "rbf_hidden": (X, A, b),
    }


def best_of(fn, args, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(*args)
        times.append(time.perf_counter() - t0)
    return min(times)


def bench_kernels(repeat):
    if not _kernels.NUMBA_KERNELS:
        print("numba is not installed; nothing to compare")
        return
    inputs = kernel_inputs(np.random.default_rng(0))
    print(f"{'kernel':<20}{'numpy ms':>12}{'numba ms':>12}{'speedup':>10}  max |diff|")
    for name, args in inputs.items():
        ref = _kernels.NUMPY_KERNELS[name](*args)
        fast = _kernels.NUMBA_KERNELS[name]
        diff = float(np.max(np.abs(fast(*args) - ref)))  # also triggers compilation
        t_np = best_of(_kernels.NUMPY_KERNELS[name], args, repeat)
        t_nb = best_of(fast, args, repeat)
        print(f"{name:<20}{t_np * 1e3:>12.2f}{t_nb * 1e3:>12.2f}{t_np / t_nb:>9.1f}x  {diff:.1e}")


_E2E = """
import time, numpy as np
from covelm import BACKEND, extract_features, preprocess_pipeline
rng = np.random.default_rng(1)
imgs = [rng.random((600, 520)) for _ in range({n})]
extract_features(preprocess_pipeline(imgs[0]))
t0 = time.perf_counter()
for im in imgs:
    extract_features(preprocess_pipeline(im))
print(BACKEND, (time.perf_counter() - t0) / len(imgs))
"""


def bench_end_to_end(n_images):
    print(f"\npreprocess + extract_features, mean of {n_images} images (after warm-up)")
    for flag in ("0", "1"):
        env = dict(os.environ, COVELM_DISABLE_NUMBA=flag)
        out = subprocess.run([sys.executable, "-c", _E2E.format(n=n_images)], env=env,
                             capture_output=True, text=True, check=True).stdout.split()
        print(f"  {out[0]:<8}{float(out[1]) * 1e3:>10.1f} ms/image")


if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--end-to-end", action="store_true")
    ap.add_argument("--images", type=int, default=5)
    args = ap.parse_args()
    bench_kernels(args.repeat)
    if args.end_to_end:
        bench_end_to_end(args.images)
