"""Minimum-effort trajectory solve, evaluation, and admissibility checks."""

from __future__ import annotations

import numpy as np
import pytest
from conftest import quadrature_cost

from cav_corridor import (
    DegenerateHorizonError,
    OutOfDomainError,
    SystemParams,
    check_constraints,
    evaluate,
    solve_profile,
)
from cav_corridor.optctrl import ViolationKind, from_json, to_json


def dense_reference(t0, v0, tm, vm, L):
    """Independent solve of the boundary conditions: assemble the raw 4x4
    system in elapsed time s = t - t0 and hand it to a dense linear solver.
    Returns a callable position(t)."""
    T = tm - t0
    rows = np.array([
        [0.0, 0.0, 0.0, 1.0],
        [0.0, 0.0, 1.0, 0.0],
        [T ** 3 / 6.0, T ** 2 / 2.0, T, 1.0],
        [T ** 2 / 2.0, T, 1.0, 0.0],
    ])
    alpha, beta, gamma, delta = np.linalg.solve(rows, [0.0, v0, L, vm])

    def position(t):
        s = np.asarray(t) - t0
        return ((alpha / 6.0 * s + beta / 2.0) * s + gamma) * s + delta

    return position


def boundary_residuals(prof, t0, v0, tm, vm, L):
    scale = max(1.0, abs(L), abs(v0), abs(vm))
    return np.array([
        float(prof.position(t0)),
        float(prof.speed(t0)) - v0,
        float(prof.position(tm)) - L,
        float(prof.speed(tm)) - vm,
    ]) / scale


def random_instance(rng, params):
    t0 = rng.uniform(0.0, 200.0)
    v0 = rng.uniform(params.v_min, params.v_max)
    vm = rng.uniform(params.v_min, params.v_max)
    tm = t0 + rng.uniform(params.L / params.v_max, params.L / params.v_min)
    return t0, v0, tm, vm


def test_boundary_conditions_hold(params):
    rng = np.random.default_rng(3)
    worst = 0.0
    for _ in range(200):
        t0, v0, tm, vm = random_instance(rng, params)
        prof = solve_profile(t0, v0, tm, vm, params.L, params.S)
        worst = max(worst, np.abs(
            boundary_residuals(prof, t0, v0, tm, vm, params.L)).max())
    assert worst < 1e-9


def test_matches_dense_linear_solve(params):
    rng = np.random.default_rng(4)
    for _ in range(100):
        t0, v0, tm, vm = random_instance(rng, params)
        prof = solve_profile(t0, v0, tm, vm, params.L, params.S)
        ref = dense_reference(t0, v0, tm, vm, params.L)
        ts = np.linspace(t0, tm, 37)
        np.testing.assert_allclose(prof.position(ts), ref(ts),
                                   rtol=0, atol=1e-8 * params.L)


def test_control_is_affine(params):
    prof = solve_profile(0.0, 8.0, 35.0, 12.0, params.L, params.S)
    ts = np.linspace(prof.t0, prof.tm, 101)
    u = prof.control(ts)
    # second difference of an affine function vanishes
    assert np.abs(np.diff(u, 2)).max() < 1e-9
    assert u[0] == pytest.approx(prof.a * prof.t0 + prof.b)


def test_time_shift_invariance(params):
    base = solve_profile(0.0, 9.0, 40.0, 11.0, params.L, params.S)
    shifted = solve_profile(123.5, 9.0, 163.5, 11.0, params.L, params.S)
    ts = np.linspace(0.0, 40.0, 200)
    np.testing.assert_allclose(shifted.position(ts + 123.5),
                               base.position(ts), rtol=0, atol=1e-7)
    np.testing.assert_allclose(shifted.control(ts + 123.5),
                               base.control(ts), rtol=0, atol=1e-9)


def test_constant_speed_run_is_a_line(params):
    v = 10.0
    prof = solve_profile(5.0, v, 5.0 + params.L / v, v, params.L, params.S)
    assert prof.a == pytest.approx(0.0, abs=1e-12)
    assert prof.b == pytest.approx(0.0, abs=1e-10)
    ts = np.linspace(prof.t0, prof.tm, 50)
    np.testing.assert_allclose(prof.speed(ts), v, atol=1e-9)
    np.testing.assert_allclose(prof.control(ts), 0.0, atol=1e-10)


def test_cruise_extension_and_exit_time(params):
    prof = solve_profile(0.0, 8.0, 36.0, 12.5, params.L, params.S)
    assert prof.tf == pytest.approx(36.0 + params.S / 12.5)
    p, v, u = evaluate(prof, prof.tf)
    assert p == pytest.approx(params.L + params.S)
    assert v == pytest.approx(12.5)
    assert u == 0.0


def test_evaluate_rejects_out_of_domain(params):
    prof = solve_profile(0.0, 8.0, 36.0, 12.5, params.L, params.S)
    with pytest.raises(OutOfDomainError):
        evaluate(prof, -1.0)
    with pytest.raises(OutOfDomainError):
        evaluate(prof, prof.tf + 1.0)


def test_degenerate_horizon_rejected(params):
    with pytest.raises(DegenerateHorizonError):
        solve_profile(10.0, 8.0, 10.0, 12.0, params.L, params.S)


def test_speed_consistent_with_position_derivative(params):
    prof = solve_profile(0.0, 7.5, 33.0, 14.0, params.L, params.S)
    ts = np.linspace(prof.t0 + 1e-3, prof.tm - 1e-3, 500)
    h = 1e-5
    numeric_v = (prof.position(ts + h) - prof.position(ts - h)) / (2 * h)
    np.testing.assert_allclose(prof.speed(ts), numeric_v, rtol=0, atol=1e-5)
    numeric_u = (prof.speed(ts + h) - prof.speed(ts - h)) / (2 * h)
    np.testing.assert_allclose(prof.control(ts), numeric_u, rtol=0, atol=1e-4)


def test_effort_beats_perturbed_alternatives(params):
    """Adding any bump that preserves the four boundary conditions can only
    raise the 0.5*K*integral(u^2) cost."""
    t0, v0, tm, vm = 0.0, 8.0, 38.0, 13.0
    prof = solve_profile(t0, v0, tm, vm, params.L, params.S)
    base_cost = quadrature_cost(prof)
    ts = np.linspace(t0, tm, 100_001)

    def bump_cost(eps):
        # phi = (t - t0)^2 (t - tm)^2 has zero value and slope at both ends,
        # so position eps*phi leaves all four boundary conditions intact and
        # adds eps*phi'' to the control
        phi_dd = (12 * ts ** 2 - 12 * (t0 + tm) * ts
                  + 2 * (t0 ** 2 + 4 * t0 * tm + tm ** 2))
        u = prof.control(ts) + eps * phi_dd
        return 0.5 * float(np.trapezoid(u * u, ts))

    for eps in (-1e-4, -1e-5, 1e-5, 1e-4):
        assert bump_cost(eps) > base_cost


def test_check_constraints_clean_case(params):
    prof = solve_profile(0.0, 10.0, 40.0, 10.0, params.L, params.S)
    assert check_constraints(prof, params) == []


def test_check_constraints_flags_speed_overshoot(params):
    # aggressive horizon forces the interior speed past v_max
    prof = solve_profile(0.0, 7.0, 27.0, 15.0, params.L, params.S)
    peak = float(np.max(prof.speed(np.linspace(0, 27, 2001))))
    assert peak > params.v_max
    kinds = {v.kind for v in check_constraints(prof, params)}
    assert ViolationKind.V_MAX in kinds
    # the reported interval brackets the true crossing times; the upper end
    # may coincide with tm because v(tm) = v_max exactly for this instance
    rec = [v for v in check_constraints(prof, params)
           if v.kind is ViolationKind.V_MAX][0]
    assert prof.t0 < rec.t_lo < rec.t_hi <= prof.tm
    assert float(prof.speed(0.5 * (rec.t_lo + rec.t_hi))) > params.v_max


def test_check_constraints_flags_control_bounds(params):
    tight = SystemParams(u_min=-0.5, u_max=0.5, u_B=-0.25)
    prof = solve_profile(0.0, 7.0, 29.0, 15.0, tight.L, tight.S)
    kinds = {v.kind for v in check_constraints(prof, tight)}
    assert kinds & {ViolationKind.U_MAX, ViolationKind.U_MIN}


def test_json_round_trip(params):
    prof = solve_profile(2.0, 9.0, 41.0, 12.0, params.L, params.S)
    back = from_json(to_json(prof))
    for name in ("a", "b", "c", "d", "t0", "tm", "tf", "vm"):
        assert getattr(back, name) == pytest.approx(getattr(prof, name),
                                                    rel=1e-12)
    assert back.L == pytest.approx(prof.L, rel=1e-9)
    assert back.S == pytest.approx(prof.S, rel=1e-9)
