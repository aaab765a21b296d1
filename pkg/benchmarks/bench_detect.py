"""Benchmark the layered-detection kernels: compiled extension vs numpy fallback.

Usage:
    python benchmarks/bench_detect.py [--trials N]

Reports per-trial detection time for a few link configurations and checks
that both backends return identical messages on the benchmark corpus.
"""

import argparse
import time

import numpy as np

from mbmsim._kernels import available_backends
from mbmsim.detect import DetectorConfig, all_unit_permutations, detect_layered_batch
from mbmsim.model import generate_constellation, map_messages_to_points

CASES = [
    # name, units, bits/unit, dims, beam, iterations, perms
    ("2x4 link, P=4", 2, 4, 4, 4, 2, 2),
    ("2x8 link, P=16", 2, 8, 8, 16, 2, 2),
    ("4x16 link, P=32, 6 perms", 4, 8, 16, 32, 2, 6),
    ("4x16 link, P=128, 24 perms", 4, 8, 16, 128, 2, 24),
]


def run_case(name, units, bits, dims, beam, iters, nperms, trials):
    c = generate_constellation(units, bits, dims, seed=1)
    rng = np.random.default_rng(2)
    msgs = rng.integers(0, c.table_size, size=(trials, units))
    pts = map_messages_to_points(c, msgs)
    rx = pts + 0.4 * (rng.standard_normal(pts.shape) + 1j * rng.standard_normal(pts.shape))
    cfg = DetectorConfig(iterations=iters, beam_width=beam,
                         permutations=all_unit_permutations(units)[:nperms])
    results = {}
    for backend in available_backends():
        n = trials if backend == "cython" else max(4, trials // 20)
        detect_layered_batch(rx[:2], c, cfg, backend=backend)  # warm up
        t0 = time.perf_counter()
        messages, _, _ = detect_layered_batch(rx[:n], c, cfg, backend=backend)
        dt = (time.perf_counter() - t0) / n
        results[backend] = (dt, messages)
    line = f"{name:28s}"
    for backend, (dt, _) in results.items():
        line += f"  {backend}: {dt * 1e3:8.3f} ms/trial"
    if len(results) == 2:
        n = min(m.shape[0] for _, m in results.values())
        same = np.array_equal(results["cython"][1][:n], results["python"][1][:n])
        speedup = results["python"][0] / results["cython"][0]
        line += f"  speedup: {speedup:6.1f}x  agree: {same}"
    print(line, flush=True)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--trials", type=int, default=200)
    args = ap.parse_args()
    print(f"backends available: {', '.join(available_backends())}")
    for case in CASES:
        run_case(*case, trials=args.trials)


if __name__ == "__main__":
    main()
