"""Compare the numba kernels with their numpy fallbacks.

    python benchmarks/bench_kernels.py [--repeat 5]

Kernel timings exclude JIT compilation (warmup runs first).  The pipeline
timing runs the full assembly + spectrum + response in a subprocess with
ACIMRESP_NUMBA=1 and =0.
"""
import argparse
import os
import subprocess
import sys
import time

import numpy as np

from acimresp import _kernels
from acimresp.maps import chebyshev_markov_map
from acimresp.spectral import ChebGrid

PIPELINE = """
import time
from acimresp import _kernels, chebyshev_markov_map, BranchSystem, ChebGrid, assemble
from acimresp import Response, PerturbationField, ObservablePoly
_kernels.warmup()
t0 = time.perf_counter()
for m in (2, 3):
    tm = assemble(BranchSystem(chebyshev_markov_map(m)), ChebGrid(96))
    Response(tm, PerturbationField([1.0, 1.0]), ObservablePoly([0, 0, 0, 1])).psi_at_one()
print(time.perf_counter() - t0)
"""


def best(fn, repeat):
    out = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        out.append(time.perf_counter() - t0)
    return min(out)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    if not _kernels.HAVE_NUMBA:
        sys.exit("numba is not installed; nothing to compare")
    _kernels.warmup()
    rng = np.random.default_rng(0)

    g = ChebGrid(128)
    z = rng.uniform(-1, 1, 3 * 128)
    w = g.bary_weights
    A = _kernels.bary_matrix_numpy(g.nodes, w, z)
    B = _kernels._bary_matrix_nb(g.nodes, w, z)
    assert np.allclose(A, B, atol=1e-13)
    rows = [("bary_matrix 384x128",
             best(lambda: _kernels.bary_matrix_numpy(g.nodes, w, z), args.repeat),
             best(lambda: _kernels._bary_matrix_nb(g.nodes, w, z), args.repeat))]

    f = chebyshev_markov_map(3)
    a = np.tile(f.taylor_at(-1.0), (20000, 1))
    tgt = rng.uniform(0, 1.9, 20000)
    lo, hi = np.zeros(20000), np.full(20000, f.crit[1] + 1)
    t1 = _kernels.solve_monotone_numpy(a, tgt, lo, hi)[0]
    t2 = _kernels._solve_monotone_nb(a, tgt, lo, hi)[0]
    assert np.allclose(t1, t2, atol=1e-13)
    rows.append(("solve_monotone 20000",
                 best(lambda: _kernels.solve_monotone_numpy(a, tgt, lo, hi), args.repeat),
                 best(lambda: _kernels._solve_monotone_nb(a, tgt, lo, hi), args.repeat)))

    for flag in ("0", "1"):
        env = dict(os.environ, ACIMRESP_NUMBA=flag)
        out = subprocess.run([sys.executable, "-c", PIPELINE], env=env,
                             capture_output=True, text=True, check=True)
        rows.append((f"pipeline N=96 (ACIMRESP_NUMBA={flag})", float(out.stdout), float("nan")))

    print(f"{'kernel':40s} {'numpy [s]':>12s} {'numba [s]':>12s} {'speedup':>8s}")
    for name, tn, tj in rows:
        if np.isfinite(tj):
            print(f"{name:40s} {tn:12.5f} {tj:12.5f} {tn / tj:8.1f}")
        else:
            print(f"{name:40s} {tn:12.5f} {'-':>12s} {'-':>8s}")


if __name__ == "__main__":
    main()
