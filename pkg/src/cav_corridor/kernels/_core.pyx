# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled batch kernel for candidate CZ-entry evaluation.

Same contract and arithmetic as ``kernels._fallback.evaluate_candidates``;
see that module for the algorithm description. Kept in lockstep so either
backend can serve the package.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport INFINITY, NAN, copysign, fabs, isnan, sqrt

cnp.import_array()

cdef double TOL = 1e-9


cdef inline double _admit(double r, double A, double B, double lo, double hi) noexcept nogil:
    # NaN input fails the comparisons and falls through to NaN output
    if r > lo and r < hi and 6.0 * A * r + 2.0 * B >= 0.0:
        return r
    return NAN


cdef inline void _stationary(double A, double B, double C, double lo, double hi,
                             double *r_one, double *r_two) noexcept nogil:
    cdef double A3 = 3.0 * A
    cdef double B2 = 2.0 * B
    cdef double disc, sq, q, r1, r2
    r1 = NAN
    r2 = NAN
    if fabs(A3) < 1e-12:
        if fabs(B2) > 1e-15 and B2 >= 0.0:
            r1 = -C / B2
    else:
        disc = B2 * B2 - 4.0 * A3 * C
        if disc >= 0.0:
            sq = sqrt(disc)
            q = -0.5 * (B2 + copysign(sq, B2))
            r1 = q / A3
            if q != 0.0:
                r2 = C / q
    r_one[0] = _admit(r1, A, B, lo, hi)
    r_two[0] = _admit(r2, A, B, lo, hi)


def evaluate_candidates(tau, ups, pred_tf, pred_vm, pred_tm, spacing,
                        has_leader, ka, kb, kc, kd, k_tm, k_vm, k_L,
                        L, S, delta, v_min, v_max, u_min, u_max):
    """Schedule, solve, bound-check, and gap-minimize a candidate batch."""
    cdef double[::1] tau_v = np.ascontiguousarray(tau, dtype=np.float64)
    cdef double[::1] ups_v = np.ascontiguousarray(ups, dtype=np.float64)
    cdef double[::1] ptf_v = np.ascontiguousarray(pred_tf, dtype=np.float64)
    cdef double[::1] pvm_v = np.ascontiguousarray(pred_vm, dtype=np.float64)
    cdef double[::1] ptm_v = np.ascontiguousarray(pred_tm, dtype=np.float64)
    cdef double[::1] spc_v = np.ascontiguousarray(spacing, dtype=np.float64)
    cdef Py_ssize_t n = tau_v.shape[0]

    s_star_arr = np.empty(n, dtype=np.float64)
    t_star_arr = np.empty(n, dtype=np.float64)
    tm_arr = np.empty(n, dtype=np.float64)
    vm_arr = np.empty(n, dtype=np.float64)
    feas_arr = np.zeros(n, dtype=np.uint8)
    status_arr = np.zeros(n, dtype=np.uint8)
    cdef double[::1] s_star_v = s_star_arr
    cdef double[::1] t_star_v = t_star_arr
    cdef double[::1] tm_v = tm_arr
    cdef double[::1] vm_v = vm_arr
    cdef unsigned char[::1] feas_v = feas_arr
    cdef unsigned char[::1] status_v = status_arr

    cdef bint use_leader = bool(has_leader)
    cdef double c_ka = ka, c_kb = kb, c_kc = kc, c_kd = kd
    cdef double c_ktm = k_tm, c_kvm = k_vm, c_kL = k_L
    cdef double c_L = L, c_S = S, c_delta = delta
    cdef double c_vmin = v_min, c_vmax = v_max, c_umin = u_min, c_umax = u_max

    cdef Py_ssize_t i, j
    cdef double t0, v0, v_peak_sq, vr, tc, vmc, cand, tf, vm, floor, tm, T, Ts
    cdef double a, b_sh, b, c, d, u_end, u_hi, u_lo, s_v, v_vertex, v_hi, v_lo
    cdef double A1, B1, C1, D1, A2, B2c, C2, D2, hi1, lo2
    cdef double r1a, r1b, r2a, r2b, smin, tbest, val
    cdef bint has_pred, bnd, degenerate, constrained, p1, p2, vertex_in
    cdef double ts[8]
    cdef double ss[8]
    cdef bint ok[8]

    for i in range(n):
        t0 = tau_v[i]
        v0 = ups_v[i]

        v_peak_sq = 2.0 * c_L * c_umax + v0 * v0
        if v_peak_sq >= c_vmax * c_vmax:
            tc = (t0 + (c_L + c_S) / c_vmax
                  + (c_vmax - v0) * (c_vmax - v0) / (2.0 * c_umax * c_vmax))
            vmc = c_vmax
        else:
            vr = sqrt(v_peak_sq if v_peak_sq > 0.0 else 0.0)
            if vr > 0.0:
                tc = t0 + (vr - v0) / c_umax + c_S / vr
            else:
                tc = NAN
            vmc = vr

        has_pred = not isnan(ptf_v[i])
        if has_pred:
            cand = ptf_v[i] + spc_v[i] / pvm_v[i]
        else:
            cand = -INFINITY
        bnd = tc > cand
        tf = tc if bnd else cand
        vm = vmc if bnd else pvm_v[i]
        if has_pred:
            floor = ptm_v[i] + c_S / vm
            if tf < floor:
                tf = floor
        tm = tf - c_S / vm
        T = tm - t0
        # degenerate: collapsed horizon, or an assigned MZ speed outside the
        # admissible band (mirrors the scalar schedule rejection)
        degenerate = (not (T >= 1e-9)
                      or vm < c_vmin - TOL or vm > c_vmax + TOL)
        Ts = 1.0 if degenerate else T

        a = (6.0 * (v0 + vm) * Ts - 12.0 * c_L) / (Ts * Ts * Ts)
        b_sh = (vm - v0 - 0.5 * a * Ts * Ts) / Ts
        b = b_sh - a * t0
        c = v0 - (b + 0.5 * a * t0) * t0
        d = -(((a / 6.0 * t0 + 0.5 * b) * t0 + c) * t0)

        u_end = a * Ts + b_sh
        u_hi = b_sh if b_sh > u_end else u_end
        u_lo = b_sh if b_sh < u_end else u_end
        v_hi = v0 if v0 > vm else vm
        v_lo = v0 if v0 < vm else vm
        if fabs(a) > 1e-15:
            s_v = -b_sh / a
            vertex_in = s_v > 0.0 and s_v < Ts
            if vertex_in:
                v_vertex = v0 + (b_sh + 0.5 * a * s_v) * s_v
                if v_vertex > v_hi:
                    v_hi = v_vertex
                if v_vertex < v_lo:
                    v_lo = v_vertex
        constrained = (u_hi > c_umax + TOL or u_lo < c_umin - TOL
                       or v_hi > c_vmax + TOL or v_lo < c_vmin - TOL)

        if constrained:
            status_v[i] = 1
        if degenerate:
            status_v[i] = 2

        vm_v[i] = vm
        if degenerate:
            tm_v[i] = NAN
            s_star_v[i] = NAN
            t_star_v[i] = NAN
            feas_v[i] = 0
            continue
        tm_v[i] = tm

        if not use_leader:
            s_star_v[i] = INFINITY
            t_star_v[i] = NAN
            feas_v[i] = 1
            continue

        A1 = (c_ka - a) / 6.0
        B1 = 0.5 * (c_kb - b)
        C1 = c_kc - c
        D1 = c_kd - d
        A2 = -a / 6.0
        B2c = -0.5 * b
        C2 = c_kvm - c
        D2 = (c_kL - c_kvm * c_ktm) - d

        hi1 = c_ktm if c_ktm < tm else tm
        p1 = t0 < hi1 - 1e-12
        lo2 = t0 if t0 > c_ktm else c_ktm
        p2 = tm > lo2 + 1e-12
        if not p1 and not p2:
            p1 = True

        _stationary(A1, B1, C1, t0, hi1, &r1a, &r1b)
        _stationary(A2, B2c, C2, lo2, tm, &r2a, &r2b)

        ts[0] = t0
        ts[1] = hi1
        ts[2] = r1a
        ts[3] = r1b
        ts[4] = lo2
        ts[5] = tm
        ts[6] = r2a
        ts[7] = r2b
        ok[0] = p1
        ok[1] = p1
        ok[2] = p1 and not isnan(r1a)
        ok[3] = p1 and not isnan(r1b)
        ok[4] = p2
        ok[5] = p2
        ok[6] = p2 and not isnan(r2a)
        ok[7] = p2 and not isnan(r2b)
        for j in range(8):
            if ok[j]:
                if j < 4:
                    ss[j] = ((A1 * ts[j] + B1) * ts[j] + C1) * ts[j] + D1
                else:
                    ss[j] = ((A2 * ts[j] + B2c) * ts[j] + C2) * ts[j] + D2
            else:
                ss[j] = INFINITY

        smin = INFINITY
        for j in range(8):
            if ss[j] < smin:
                smin = ss[j]
        tbest = INFINITY
        for j in range(8):
            if ss[j] <= smin + 1e-12 and ts[j] < tbest:
                tbest = ts[j]

        s_star_v[i] = smin
        t_star_v[i] = tbest
        feas_v[i] = 1 if smin >= c_delta - TOL else 0

    return s_star_arr, t_star_arr, tm_arr, vm_arr, feas_arr, status_arr
