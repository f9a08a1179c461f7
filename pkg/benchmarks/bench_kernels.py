"""Throughput comparison of the compiled and pure-python chain kernels.

Runs identical (coordinate, uniform) blocks through every importable
backend, checks that the trajectories agree bit for bit, and reports
million-steps-per-second for the two hot loops: the banded mean-field
quadruple and the conditioned edge chain.

Usage: python3 benchmarks/bench_kernels.py [--steps N]
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from phasefkg import ergm, gcwm, graphs, kernels
from phasefkg.rng import stream


def bench_gcwm_quadruple(impl, steps: int, n: int = 30) -> tuple:
    params = gcwm.GcwmParams(beta=(2.0, 0.3))
    band = gcwm.PhaseBand(m_star=0.928, eta=0.45, epsilon=0.3)
    kmin, kmax = band.level_bounds(n)
    lmin, lmax = band.level_bounds(n, inner=True)
    p0 = gcwm.conditional_p0_table(params, n)
    tilt = gcwm.tilted_conditional_p0_table(
        params, n, np.arange(n + 1.0) / n, 2.0 * 30.0
    )
    x = np.zeros(n, dtype=np.uint8)
    x[:lmax] = 1
    xs = np.stack([x, x.copy(), x.copy(), x.copy()])
    ones4 = np.full(4, lmax, dtype=np.int64)
    counters = np.array([0, 0, 0, 0, -1, 0, 0], dtype=np.int64)
    gen = stream(0, "bench-gcwm")
    idx = gen.integers(0, n, size=steps).astype(np.int64)
    u = gen.random(steps)
    t0 = time.perf_counter()
    impl.gcwm_quadruple_run(
        xs, ones4, p0, tilt, kmin, kmax, lmin, lmax, idx, u, counters, 0
    )
    elapsed = time.perf_counter() - t0
    return elapsed, (xs.copy(), ones4.copy(), counters.copy())


def bench_ergm_chain(impl, steps: int, n: int = 24) -> tuple:
    spec = ergm.edge_triangle_spec(-0.35, 0.2, n)
    p_star = ergm.ergm_rate_analysis(spec).attracting_maximizers[0].p
    p0 = ergm.update_probability_table(spec)
    eu, ev = ergm._edge_endpoints(n)
    cfg = graphs.gnp_config(n, p_star, stream(1, "bench-warm"))
    adj = cfg.adjacency_masks().astype(np.uint64)
    ecount = cfg.edge_count()
    counters = np.array([ecount, 0, 0, 0, -1, 0], dtype=np.int64)
    gen = stream(0, "bench-ergm")
    ne = len(eu)
    idx = gen.integers(0, ne, size=steps).astype(np.int64)
    u = gen.random(steps)
    ecount_out = np.zeros(steps, dtype=np.int64)
    empty_i = np.zeros(0, dtype=np.int64)
    empty_u8 = np.zeros(0, dtype=np.uint8)
    snaps = np.zeros((0, n), dtype=np.uint64)
    win = np.zeros(4, dtype=np.int64)
    flags = np.zeros(0, dtype=np.uint8)
    t0 = time.perf_counter()
    impl.ergm_chain_run(
        adj, n, eu, ev, p0, 0, 0, ne, np.zeros(0, dtype=np.uint8), win, flags,
        idx, u, ecount_out, 0, snaps, empty_i, empty_u8, counters,
    )
    elapsed = time.perf_counter() - t0
    return elapsed, (adj.copy(), counters.copy(), ecount_out.copy())


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--steps", type=int, default=2_000_000)
    args = parser.parse_args()
    backends = kernels.backends()
    print(f"active backend: {kernels.BACKEND}")
    for name, bench in (
        ("gcwm quadruple", bench_gcwm_quadruple),
        ("ergm edge chain", bench_ergm_chain),
    ):
        results = {}
        for label, impl in backends.items():
            steps = args.steps if label == "compiled" else max(args.steps // 20, 10_000)
            elapsed, state = bench(impl, steps)
            results[label] = (steps, elapsed, state)
            print(
                f"{name:16s} {label:9s} {steps/elapsed/1e6:8.2f} Msteps/s"
                f"  ({steps} steps in {elapsed:.3f}s)"
            )
        if len(results) == 2:
            short = min(r[0] for r in results.values())
            states = []
            for label, impl in backends.items():
                _, state = bench(impl, short)
                states.append(state)
            same = all(
                np.array_equal(a, b) for a, b in zip(states[0], states[1])
            )
            print(f"{name:16s} trajectories identical across backends: {same}")
            if not same:
                raise SystemExit(f"{name}: backend mismatch")


if __name__ == "__main__":
    main()