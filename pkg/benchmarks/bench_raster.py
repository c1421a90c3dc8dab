#!/usr/bin/env python3
"""Benchmark the compiled rasterization kernel against the numpy fallback.

Times per-tube cell enumeration on representative workloads and prints a
small table with the speedup.  Both backends must produce identical cells;
this is asserted on every workload.
"""
import time

import numpy as np

from kakeyalab import _kernels
from kakeyalab.curves import parabola_family
from kakeyalab.raster import profile_on_slabs


def workloads():
    out = []
    for d, delta, n_curves, label in [
        (2, 2**-8, 64, "d=2 delta=2^-8"),
        (2, 2**-9, 32, "d=2 delta=2^-9"),
        (3, 2**-6, 16, "d=3 delta=2^-6"),
    ]:
        h = delta / 4
        M = int(round(2 / h))
        ts = np.linspace(0.1, 0.9, n_curves)
        m = d - 1
        params = np.zeros((n_curves, 2 * m))
        params[:, 0] = ts - 0.7
        params[:, m] = ts - 0.3
        fam = parabola_family(params, d=d, bend=0.4)
        profs = [profile_on_slabs(fam, i, h, M) for i in range(n_curves)]
        out.append((label, profs, delta, h, M))
    return out


def run_backend(backend, profs, delta, h, M, repeats=3):
    best = float("inf")
    cells = None
    for _ in range(repeats):
        t0 = time.perf_counter()
        cells = [backend.tube_cells(p, delta, h, M) for p in profs]
        best = min(best, time.perf_counter() - t0)
    return best, cells


def main():
    try:
        cython = _kernels.get_backend("cython")
    except ImportError:
        cython = None
    python = _kernels.get_backend("python")

    print(f"{'workload':20s} {'python':>10s} {'cython':>10s} {'speedup':>8s}  cells")
    for label, profs, delta, h, M in workloads():
        t_py, cells_py = run_backend(python, profs, delta, h, M)
        n_cells = sum(len(c) for c in cells_py)
        if cython is None:
            print(f"{label:20s} {1e3 * t_py:9.1f}ms {'n/a':>10s} {'':8s}  {n_cells}")
            continue
        t_cy, cells_cy = run_backend(cython, profs, delta, h, M)
        for a, b in zip(cells_py, cells_cy):
            assert np.array_equal(a, b), "backend mismatch"
        print(
            f"{label:20s} {1e3 * t_py:9.1f}ms {1e3 * t_cy:9.1f}ms "
            f"{t_py / t_cy:7.1f}x  {n_cells}"
        )


if __name__ == "__main__":
    main()
