"""Benchmark the compiled kernel lane against the numpy fallback.

Usage::

    python benchmarks/bench_kernels.py [--side 2048] [--repeats 5]

Also times one full two-stage binarization (oracle backend) per lane via
INKSTONE_FORCE_NUMPY, which is read at import time; the pipeline rows
therefore run in a subprocess.
"""

from __future__ import annotations

import argparse
import subprocess
import sys
import time

import numpy as np

from inkstone._kernels import HAVE_COMPILED, numpy_ops

if HAVE_COMPILED:
    from inkstone._kernels import _core


def timeit(fn, repeats):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def bench_ops(side: int, repeats: int):
    rng = np.random.default_rng(0)
    mask = rng.random((side, side)) < 0.3
    img = rng.random((side, side)) * 255.0

    cases = {
        "label_8": lambda ops: ops.label_8(mask),
        "dilate_rect 15x5": lambda ops: ops.dilate_rect(mask, 15, 5),
        "resize_bilinear /2": lambda ops: ops.resize_bilinear(img, side // 2, side // 2),
        "resize_nearest x2": lambda ops: ops.resize_nearest(mask, side * 2, side * 2),
    }
    print(f"\nkernels on {side}x{side} (best of {repeats}):", flush=True)
    print(f"{'op':24s} {'numpy':>10s} {'compiled':>10s} {'speedup':>8s}", flush=True)
    for name, call in cases.items():
        t_np = timeit(lambda: call(numpy_ops), repeats)
        if HAVE_COMPILED:
            t_c = timeit(lambda: call(_core), repeats)
            print(f"{name:24s} {t_np * 1e3:9.1f}ms {t_c * 1e3:9.1f}ms {t_np / t_c:7.1f}x",
                  flush=True)
        else:
            print(f"{name:24s} {t_np * 1e3:9.1f}ms {'n/a':>10s} {'':>8s}", flush=True)


PIPELINE_SNIPPET = """
import time
import numpy as np
from inkstone.inference import binarize
from inkstone.backends import oracle_binarizer
from inkstone import KERNEL_LANE

rng = np.random.default_rng(3)
h = w = {side}
mask = np.zeros((h, w), dtype=bool)
for y in range(30, h - 60, 64):
    for x in range(30, w - 60, 48):
        if rng.random() < 0.7:
            mask[y:y + 28, x:x + 20] = True
gray = np.clip(rng.normal(170, 12, (h, w)), 0, 255).astype(np.uint8)
gray[mask] = np.clip(rng.normal(70, 12, int(mask.sum())), 0, 255)
t0 = time.perf_counter()
binarize(gray, oracle_binarizer(mask, side=512))
print(f"  {{KERNEL_LANE}}: {{time.perf_counter() - t0:.2f}}s")
"""


def bench_pipeline(side: int):
    print(f"\nfull two-stage pipeline, oracle backend, {side}x{side}:", flush=True)
    for force in ("0", "1"):
        env = {"INKSTONE_FORCE_NUMPY": force}
        subprocess.run([sys.executable, "-c", PIPELINE_SNIPPET.format(side=side)],
                       env={**__import__("os").environ, **env}, check=True)


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--side", type=int, default=2048)
    parser.add_argument("--repeats", type=int, default=5)
    parser.add_argument("--skip-pipeline", action="store_true")
    args = parser.parse_args()
    if not HAVE_COMPILED:
        print("note: compiled kernels not built, timing the numpy lane only")
    bench_ops(args.side, args.repeats)
    if not args.skip_pipeline:
        bench_pipeline(min(args.side, 1536))


if __name__ == "__main__":
    main()
