"""Benchmark the candidate-evaluation kernel: numpy fallback vs extension.

Builds the same workload the feasibility raster produces (a committed lead
vehicle plus a grid of candidate entry states behind it), then times
``evaluate_candidates`` from both backends on identical arrays and reports
the wall-clock ratio. Also cross-checks that the two backends return
bit-identical results on every batch they time.

Run:
    python3 benchmarks/bench_kernels.py
    python3 benchmarks/bench_kernels.py --sizes 1000 100000 --repeats 7
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from cav_corridor.optctrl import solve_profile
from cav_corridor.scheduler import assign, spacing_for_label
from cav_corridor.types import SubsetLabel, SystemParams
from cav_corridor.kernels import _fallback

try:
    from cav_corridor.kernels import _core
except ImportError:
    _core = None


def build_batch(n: int, params: SystemParams):
    """Candidate grid behind one committed lead vehicle, kernel-ready."""
    sched = assign(1, None, None, 0.0, 9.0, params)
    leader = solve_profile(0.0, 9.0, sched.tm, sched.vm, params.L, params.S)
    rng = np.random.default_rng(12)
    tau = rng.uniform(leader.t0 + 0.2, leader.tm, n)
    ups = rng.uniform(params.v_min, params.v_max, n)
    pred_tf = np.full(n, leader.tf)
    pred_vm = np.full(n, leader.vm)
    pred_tm = np.full(n, leader.tm)
    spacing = np.full(n, spacing_for_label(SubsetLabel.L, params))
    return (np.ascontiguousarray(tau), np.ascontiguousarray(ups),
            pred_tf, pred_vm, pred_tm, spacing,
            1, leader.a, leader.b, leader.c, leader.d,
            leader.tm, leader.vm, leader.L,
            params.L, params.S, params.delta,
            params.v_min, params.v_max, params.u_min, params.u_max)


def best_time(fn, args, repeats: int) -> float:
    best = np.inf
    for _ in range(repeats):
        start = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - start)
    return best


def check_parity(args) -> float:
    """Largest elementwise difference between the two backends (want 0)."""
    out_py = _fallback.evaluate_candidates(*args)
    out_c = _core.evaluate_candidates(*args)
    worst = 0.0
    for a, b in zip(out_py, out_c):
        both_nan = np.isnan(a) & np.isnan(b) if a.dtype.kind == "f" else None
        diff = np.abs(np.asarray(a, dtype=float) - np.asarray(b, dtype=float))
        if both_nan is not None:
            diff = np.where(both_nan, 0.0, diff)
        worst = max(worst, float(np.nanmax(diff)))
    return worst


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--sizes", type=int, nargs="+",
                        default=[1_000, 10_000, 100_000, 1_000_000])
    parser.add_argument("--repeats", type=int, default=5)
    args = parser.parse_args()

    if _core is None:
        print("compiled backend not available; nothing to compare")
        return 1

    params = SystemParams()
    print(f"{'batch':>10}  {'python':>12}  {'compiled':>12}  "
          f"{'speedup':>8}  {'parity':>8}")
    for n in args.sizes:
        batch = build_batch(n, params)
        parity = check_parity(batch)
        t_py = best_time(_fallback.evaluate_candidates, batch, args.repeats)
        t_c = best_time(_core.evaluate_candidates, batch, args.repeats)
        print(f"{n:>10}  {t_py * 1e3:>10.2f}ms  {t_c * 1e3:>10.2f}ms  "
              f"{t_py / t_c:>7.1f}x  {parity:>8.1e}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
