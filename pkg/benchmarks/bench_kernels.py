"""Benchmark the numba kernels against their pure-numpy fallbacks.

Runs each hot kernel under both backends by re-executing itself in a
subprocess with BERGMAN_LIMITS_NO_NUMBA=1 for the numpy lane.

    python3 benchmarks/bench_kernels.py
"""

import json
import os
import subprocess
import sys
import time

import numpy as np


def run_suite():
    from bergman_limits import _kernels as K

    rng = np.random.default_rng(0)
    results = {}

    z = 0.8 * (rng.normal(size=2000) + 1j * rng.normal(size=2000))
    z /= np.abs(z).max() / 0.95
    w = z.copy()
    K.pairwise_beta_disk(z[:4], w[:4], np.sqrt(2))  # JIT warmup
    t0 = time.perf_counter()
    for _ in range(3):
        K.pairwise_beta_disk(z, w, np.sqrt(2))
    results["pairwise_beta_disk[2000x2000]"] = (time.perf_counter() - t0) / 3

    samples = z
    offsets = np.arange(0, 2001, 40, dtype=np.int64)
    K.min_beta_disk_cells(z[:4], samples, offsets, np.sqrt(2))
    t0 = time.perf_counter()
    for _ in range(3):
        K.min_beta_disk_cells(z, samples, offsets, np.sqrt(2))
    results["min_beta_disk_cells[2000x50]"] = (time.perf_counter() - t0) / 3

    M = rng.normal(size=(200000, 2, 2)) + 1j * rng.normal(size=(200000, 2, 2))
    K.sv2x2(M[:4])
    t0 = time.perf_counter()
    K.sv2x2(M)
    results["sv2x2[200k]"] = time.perf_counter() - t0

    # shifted Toeplitz series: degree 20 at t1 = 1 - 1e-4 (the boundary regime)
    P = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=np.complex128)
    norms = 1.0 / np.sqrt(np.arange(1, 22, dtype=float))
    K.shifted_poly_toeplitz(P, 0.9, 0.0, 21, norms)
    t0 = time.perf_counter()
    K.shifted_poly_toeplitz(P, 1.0 - 1e-4, 0.0, 21, norms)
    results["shifted_toeplitz_series[deg20,t=1-1e-4]"] = time.perf_counter() - t0

    return K.backend_name(), results


def main():
    if os.environ.get("_BENCH_CHILD"):
        backend, results = run_suite()
        print(json.dumps({"backend": backend, "results": results}))
        return

    rows = {}
    for disable in ("0", "1"):
        env = dict(os.environ, _BENCH_CHILD="1", BERGMAN_LIMITS_NO_NUMBA=disable)
        out = subprocess.run([sys.executable, __file__], env=env,
                             capture_output=True, text=True, check=True)
        payload = json.loads(out.stdout.strip().splitlines()[-1])
        rows[payload["backend"]] = payload["results"]

    names = list(next(iter(rows.values())))
    width = max(len(n) for n in names)
    print(f"{'kernel':<{width}}  {'numba':>10}  {'numpy':>10}  {'speedup':>8}")
    for n in names:
        tn = rows.get("numba", {}).get(n, float("nan"))
        tp = rows.get("numpy", {}).get(n, float("nan"))
        print(f"{n:<{width}}  {tn:>10.4f}  {tp:>10.4f}  {tp / tn:>7.1f}x")


if __name__ == "__main__":
    main()
