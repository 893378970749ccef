"""Pure-numpy batch kernel for candidate CZ-entry evaluation.

This is the reference implementation of the hot loop shared by the entry
feasibility raster and the enforcement-zone planner: for each candidate
(tau, upsilon) it derives the schedule (lower bound vs. predecessor
candidate), solves the follower cubic, checks speed/control bounds, and
minimizes the piecewise-cubic gap to the leader. The compiled extension in
``_core`` implements the identical arithmetic; either backend may serve
``cav_corridor.kernels.evaluate_candidates``.
"""

from __future__ import annotations

import numpy as np

_TOL = 1e-9


def _stationary(A, B, C, lo, hi):
    """Interior minimizer candidates of A t^3 + B t^2 + C t + D per row.

    Returns two candidate-time arrays with invalid entries set to NaN:
    real roots of the derivative inside (lo, hi) at which the second
    derivative is non-negative. Cancellation-safe quadratic form.
    """
    A3 = 3.0 * A
    B2 = 2.0 * B
    linear = np.abs(A3) < 1e-12
    with np.errstate(invalid="ignore", divide="ignore"):
        r_lin = np.where(np.abs(B2) > 1e-15, -C / B2, np.nan)
        r_lin = np.where(linear & (B2 >= 0.0), r_lin, np.nan)
        disc = B2 * B2 - 4.0 * A3 * C
        sq = np.sqrt(np.maximum(disc, 0.0))
        q = -0.5 * (B2 + np.copysign(sq, B2))
        r1 = np.where(~linear & (disc >= 0.0), q / A3, np.nan)
        r2 = np.where(~linear & (disc >= 0.0) & (q != 0.0), C / q, np.nan)
        r1 = np.where(linear, r_lin, r1)

        def admit(r):
            ok = (r > lo) & (r < hi)
            curv = 6.0 * A * r + 2.0 * B
            return np.where(ok & (curv >= 0.0), r, np.nan)

        return admit(r1), admit(r2)


def evaluate_candidates(tau, ups, pred_tf, pred_vm, pred_tm, spacing,
                        has_leader, ka, kb, kc, kd, k_tm, k_vm, k_L,
                        L, S, delta, v_min, v_max, u_min, u_max):
    """Schedule, solve, bound-check, and gap-minimize a candidate batch.

    Arrays are one entry per candidate; pred_tf holding NaN marks a
    candidate with no queue predecessor. Leader data are scalars (one
    leader per batch); has_leader = 0 disables the gap computation.

    Returns (s_star, t_star, tm, vm, feasible, status) where status is
    0 = clean, 1 = a speed/control bound activates on the follower cubic,
    2 = degenerate horizon (no trajectory; s_star is NaN).
    """
    tau = np.asarray(tau, dtype=float)
    ups = np.asarray(ups, dtype=float)
    pred_tf = np.asarray(pred_tf, dtype=float)
    pred_vm = np.asarray(pred_vm, dtype=float)
    pred_tm = np.asarray(pred_tm, dtype=float)
    spacing = np.asarray(spacing, dtype=float)
    n = tau.size

    with np.errstate(invalid="ignore", divide="ignore"):
        # fastest admissible run: u_max to v_max then cruise, or u_max
        # throughout if the CZ is too short to reach v_max
        v_peak_sq = 2.0 * L * u_max + ups * ups
        vr = np.sqrt(np.maximum(v_peak_sq, 0.0))
        branch_top = v_peak_sq >= v_max * v_max
        tc = np.where(
            branch_top,
            tau + (L + S) / v_max + (v_max - ups) ** 2 / (2.0 * u_max * v_max),
            tau + (vr - ups) / u_max + S / np.where(vr > 0.0, vr, np.nan))
        vmc = np.where(branch_top, v_max, vr)

        has_pred = ~np.isnan(pred_tf)
        safe_pvm = np.where(has_pred, pred_vm, 1.0)
        cand = np.where(has_pred, pred_tf + spacing / safe_pvm, -np.inf)
        bound = tc > cand
        tf = np.where(bound, tc, cand)
        vm = np.where(bound, vmc, np.where(has_pred, pred_vm, vmc))
        floor = np.where(has_pred, pred_tm + S / vm, -np.inf)
        tf = np.maximum(tf, floor)
        tm = tf - S / vm
        T = tm - tau
        # degenerate: collapsed horizon, or an assigned MZ speed outside the
        # admissible band (mirrors the scalar schedule rejection)
        degenerate = (~(T >= 1e-9)
                      | (vm < v_min - _TOL) | (vm > v_max + _TOL))
        Ts = np.where(degenerate, 1.0, T)

        a = (6.0 * (ups + vm) * Ts - 12.0 * L) / (Ts * Ts * Ts)
        b_sh = (vm - ups - 0.5 * a * Ts * Ts) / Ts
        b = b_sh - a * tau
        c = ups - (b + 0.5 * a * tau) * tau
        d = -(((a / 6.0 * tau + 0.5 * b) * tau + c) * tau)

        # follower bound activation: u is affine (endpoint extrema), v is
        # quadratic (endpoints plus interior vertex when it falls inside)
        u_end = a * Ts + b_sh
        u_hi = np.maximum(b_sh, u_end)
        u_lo = np.minimum(b_sh, u_end)
        safe_a = np.where(np.abs(a) > 1e-15, a, 1.0)
        s_v = -b_sh / safe_a
        vertex_in = (np.abs(a) > 1e-15) & (s_v > 0.0) & (s_v < Ts)
        v_vertex = ups + (b_sh + 0.5 * a * s_v) * s_v
        v_hi = np.maximum(ups, vm)
        v_lo = np.minimum(ups, vm)
        v_hi = np.where(vertex_in, np.maximum(v_hi, v_vertex), v_hi)
        v_lo = np.where(vertex_in, np.minimum(v_lo, v_vertex), v_lo)
        constrained = ((u_hi > u_max + _TOL) | (u_lo < u_min - _TOL)
                       | (v_hi > v_max + _TOL) | (v_lo < v_min - _TOL))

        status = np.zeros(n, dtype=np.uint8)
        status[constrained] = 1
        status[degenerate] = 2

        if not has_leader:
            s_star = np.where(degenerate, np.nan, np.inf)
            t_star = np.full(n, np.nan)
            feasible = (~degenerate).astype(np.uint8)
            tm = np.where(degenerate, np.nan, tm)
            return s_star, t_star, tm, vm, feasible, status

        # gap piece while the leader still runs its CZ cubic
        A1 = (ka - a) / 6.0
        B1 = 0.5 * (kb - b)
        C1 = kc - c
        D1 = kd - d
        # gap piece once the leader cruises at k_vm from (k_tm, k_L)
        A2 = -a / 6.0
        B2 = -0.5 * b
        C2 = k_vm - c
        D2 = (k_L - k_vm * k_tm) - d

        hi1 = np.minimum(k_tm, tm)
        p1 = (tau < hi1 - 1e-12) & ~degenerate
        lo2 = np.maximum(tau, k_tm)
        p2 = (tm > lo2 + 1e-12) & ~degenerate
        # a collapsed horizon still needs one evaluation point
        p1 = p1 | (~p1 & ~p2 & ~degenerate)

        r1a, r1b = _stationary(A1, B1, C1, tau, hi1)
        r2a, r2b = _stationary(A2, B2, C2, lo2, tm)

        def val1(t):
            return ((A1 * t + B1) * t + C1) * t + D1

        def val2(t):
            return ((A2 * t + B2) * t + C2) * t + D2

        times = np.stack([tau, hi1, r1a, r1b, lo2, tm, r2a, r2b], axis=1)
        values = np.stack([val1(tau), val1(hi1), val1(r1a), val1(r1b),
                           val2(lo2), val2(tm), val2(r2a), val2(r2b)], axis=1)
        valid = np.stack([p1, p1, p1 & ~np.isnan(r1a), p1 & ~np.isnan(r1b),
                          p2, p2, p2 & ~np.isnan(r2a), p2 & ~np.isnan(r2b)],
                         axis=1)
        values = np.where(valid, values, np.inf)
        s_star = np.min(values, axis=1)
        near = values <= s_star[:, None] + 1e-12
        t_star = np.min(np.where(near, times, np.inf), axis=1)

        s_star = np.where(degenerate, np.nan, s_star)
        t_star = np.where(degenerate, np.nan, t_star)
        tm = np.where(degenerate, np.nan, tm)
        feasible = ((s_star >= delta - _TOL) & ~degenerate).astype(np.uint8)
        return s_star, t_star, tm, vm, feasible, status
