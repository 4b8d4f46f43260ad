"""Compiled vs numpy kernels on full exRec batches and Adam updates.

    python3 benchmarks/bench_kernels.py [--shots 4096] [--tableau-shots 64]
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from pieceable import _backend
from pieceable.exrec import N_TABLEAU, ExRecProgram, run_exrec
from pieceable.machines import Depolarizing, FrameMachine, TableauMachine
from pieceable.noise import NoiseParams
from pieceable.pieceable import build_ccnot_A


def _best(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def bench_frame(prog, kernels, shots, eps):
    def go():
        m = FrameMachine(N_TABLEAU, shots, Depolarizing(NoiseParams(eps), np.random.default_rng(1)), kernels=kernels)
        run_exrec(prog, m)
    return go


def bench_tableau(prog, kernels, shots, eps):
    def go():
        m = TableauMachine(N_TABLEAU, shots, Depolarizing(NoiseParams(eps), np.random.default_rng(1)),
                           kernels=kernels)
        run_exrec(prog, m)
    return go


def bench_adam(kernels, size, steps):
    rng = np.random.default_rng(0)
    p, g = rng.standard_normal(size).astype(np.float32), rng.standard_normal(size).astype(np.float32)
    m, v = np.zeros_like(p), np.zeros_like(p)

    def go():
        for t in range(1, steps + 1):
            kernels.adam_step(p, g, m, v, 0.9, 0.999, 1e-4 * np.sqrt(1 - 0.999 ** t) / (1 - 0.9 ** t), 1e-8)
    return go


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--shots", type=int, default=4096, help="frame-backend shots per batch")
    ap.add_argument("--tableau-shots", type=int, default=64)
    ap.add_argument("--eps", type=float, default=1e-3)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)
    if _backend.compiled_kernels is None:
        print("compiled extension not built; nothing to compare")
        return 1
    prog = ExRecProgram(build_ccnot_A())
    cases = [
        (f"frame exRec, {args.shots} shots", lambda k: bench_frame(prog, k, args.shots, args.eps), args.shots),
        (f"tableau exRec, {args.tableau_shots} shots", lambda k: bench_tableau(prog, k, args.tableau_shots, args.eps),
         args.tableau_shots),
        ("adam, 1e6 params x 20 steps", lambda k: bench_adam(k, 10 ** 6, 20), None),
    ]
    print(f"{'case':34s} {'compiled':>10s} {'python':>10s} {'speedup':>8s}")
    for label, make, shots in cases:
        tc = _best(make(_backend.compiled_kernels), args.repeat)
        tp = _best(make(_backend.python_kernels), args.repeat)
        rate = f"  ({shots / tc:,.0f} shots/s compiled)" if shots else ""
        print(f"{label:34s} {tc:9.3f}s {tp:9.3f}s {tp / tc:7.1f}x{rate}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
