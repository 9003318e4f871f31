"""Time the compiled and pure-Python kernels side by side.

    python3 benchmarks/bench_kernels.py [--paths N] [--steps N]
"""
from __future__ import annotations

import argparse
import time

import numpy as np

from bnpricing import kernels
from bnpricing.mmm import MmmParams
from bnpricing.simulate import _euler_coefficients, substream, uniform_grid


def _best(fn, repeat: int) -> float:
    best = float("inf")
    for _ in range(repeat):
        start = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - start)
    return best


def bench_psi(kern, n: int, repeat: int) -> float:
    rng = np.random.default_rng(0)
    x = np.ascontiguousarray(rng.uniform(0.0, 40.0, n))
    delta = np.ascontiguousarray(rng.choice([0.0, 4.0], n))
    lam = np.ascontiguousarray(rng.uniform(0.1, 30.0, n))
    return _best(lambda: kern.ncx2_cdf(x, delta, lam), repeat)


def bench_euler(kern, n_paths: int, n_steps: int, repeat: int) -> float:
    params = MmmParams(lambda_bar=1.0)
    grid = uniform_grid(0.0, n_steps / 2520.0, 1.0 / 2520.0)
    c = _euler_coefficients(params, grid)
    idx = np.array([0, n_steps], dtype=np.int64)

    def run():
        bitgens = [substream(42, 1, p) for p in range(n_paths)]
        kern.euler_sqrt_paths(10.0, c["dt"], c["sqdt"], c["vol"], c["c3"], c["sig_coef"],
                              c["half_drift"], bitgens, idx, 1e-8)
    return _best(run, repeat)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--psi", type=int, default=20_000, help="CDF evaluations")
    ap.add_argument("--paths", type=int, default=1_000)
    ap.add_argument("--steps", type=int, default=2_520)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()

    names = ["python"] + (["cython"] if kernels.compiled_available() else [])
    rows = []
    for name in names:
        kern = kernels.get_backend(name)
        rows.append((name,
                     bench_psi(kern, args.psi, args.repeat),
                     bench_euler(kern, args.paths, args.steps, args.repeat)))
    print(f"{'backend':<8} {'psi (s)':>10} {'euler (s)':>10}   "
          f"[{args.psi} CDF calls; {args.paths} paths x {args.steps} steps]")
    for name, t_psi, t_eul in rows:
        print(f"{name:<8} {t_psi:10.4f} {t_eul:10.4f}")
    if len(rows) == 2:
        print(f"{'speedup':<8} {rows[0][1] / rows[1][1]:10.1f}x {rows[0][2] / rows[1][2]:9.1f}x")


if __name__ == "__main__":
    main()
