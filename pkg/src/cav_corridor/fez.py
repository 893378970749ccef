"""Enforcement-zone sizing and in-zone entry planning.

The enforcement zone is the stretch of road ahead of the CZ where each
vehicle adjusts speed so that its CZ entry pair (tau, upsilon) keeps the
rear-end gap to its lane leader safe throughout the CZ. Sizing covers the
worst case (fast vehicle behind a slow leader); planning searches reachable
entry pairs and falls back to the guaranteed worst-case target.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import FezGuaranteeError, InvalidManeuverError, ParameterError
from .feasibility import FeasibilityContext, is_feasible
from .optctrl import OptimalProfile
from .scheduler import ScheduleAssignment
from .types import CaseTag, SubsetLabel, SystemParams


@dataclass(frozen=True)
class FezDesign:
    """Zone length, the sizing precondition, and the guaranteed target.

    The target (tau, upsilon) is expressed relative to the lane leader's CZ
    entry time and is None when no leader reference is supplied.
    """

    f_bar: float
    condition_ok: bool
    worst_case_target: tuple[float, float] | None


@dataclass(frozen=True)
class FezPlan:
    """Piecewise-constant control through the zone and the achieved entry."""

    vehicle_id: int
    segments: list[tuple[float, float]]  # (control, duration) pairs
    tau: float
    upsilon: float
    feasible: bool


def check_parameter_condition(params: SystemParams) -> bool:
    """Whether the speed band, braking bound, and gap jointly admit the
    worst-case guarantee: (v_min - v_max)/u_B >= delta/v_min."""
    return (params.v_min - params.v_max) / params.u_B >= params.delta / params.v_min


def fez_length(params: SystemParams) -> float:
    """Zone length that lets a v_max vehicle brake to v_min at u_B exactly."""
    if params.u_B >= 0.0:
        raise ParameterError("u_B must be negative")
    return (params.v_min ** 2 - params.v_max ** 2) / (2.0 * params.u_B)


def entry_distance(v_F: float, upsilon: float, u: float) -> float:
    """Distance covered while moving from speed v_F to upsilon at constant u."""
    if upsilon == v_F:
        return 0.0
    if u == 0.0 or (upsilon > v_F) != (u > 0.0):
        raise InvalidManeuverError(
            f"cannot reach {upsilon:.6g} m/s from {v_F:.6g} m/s at u = {u:.6g}")
    return (upsilon * upsilon - v_F * v_F) / (2.0 * u)


def design(params: SystemParams, leader_t0: float | None = None) -> FezDesign:
    """Sizing summary; includes the guaranteed target when a leader CZ entry
    time is given."""
    target = None
    if leader_t0 is not None:
        target = (leader_t0 + (params.v_min - params.v_max) / params.u_B,
                  params.v_min)
    return FezDesign(f_bar=fez_length(params),
                     condition_ok=check_parameter_condition(params),
                     worst_case_target=target)


@dataclass
class FezContext:
    """Committed state of the queue ahead, as known when planning starts.

    Arrays are aligned and sorted by committed CZ entry time; labels give
    each committed vehicle's relation to the vehicle being planned (used to
    pick the clearance term of the exit-time rule). ``leader`` is the
    predicted CZ profile of the last committed same-lane vehicle and
    ``lane_floor`` the earliest CZ entry preserving same-lane order.
    """

    committed_tau: np.ndarray = field(default_factory=lambda: np.empty(0))
    committed_tf: np.ndarray = field(default_factory=lambda: np.empty(0))
    committed_vm: np.ndarray = field(default_factory=lambda: np.empty(0))
    committed_tm: np.ndarray = field(default_factory=lambda: np.empty(0))
    committed_spacing: np.ndarray = field(default_factory=lambda: np.empty(0))
    committed_labels: list[SubsetLabel] = field(default_factory=list)
    leader: OptimalProfile | None = None
    lane_floor: float = -math.inf


def _traverse_time(v_F: float, upsilon: float, u: float, f_bar: float) -> float:
    """Zone traversal time for adjust-at-u-then-cruise-at-upsilon."""
    if upsilon == v_F:
        return f_bar / v_F
    return f_bar / upsilon + (upsilon - v_F) ** 2 / (2.0 * u * upsilon)


def _tau_window(v_F: float, upsilon: float, t_F: float, f_bar: float,
                params: SystemParams, extended: bool) -> tuple[float, float] | None:
    """Reachable CZ entry times at a given entry speed, or None.

    Acceleration uses controls up to u_max; deceleration normally stays
    within the design bound u_B and, when ``extended``, is allowed down to
    u_min to defer entry further.
    """
    if abs(upsilon - v_F) < 1e-12:
        t = t_F + f_bar / v_F
        return t, t
    u_edge = (upsilon * upsilon - v_F * v_F) / (2.0 * f_bar)
    if upsilon > v_F:
        if u_edge > params.u_max:
            return None
        return (t_F + _traverse_time(v_F, upsilon, params.u_max, f_bar),
                t_F + _traverse_time(v_F, upsilon, u_edge, f_bar))
    u_strong = params.u_min if extended else params.u_B
    if u_edge < u_strong:
        return None
    return (t_F + _traverse_time(v_F, upsilon, u_edge, f_bar),
            t_F + _traverse_time(v_F, upsilon, u_strong, f_bar))


def max_traverse_time(v_F: float, params: SystemParams) -> float:
    """Longest zone traversal reachable from entry speed v_F: brake to v_min
    (allowing controls down to u_min) and crawl the remainder."""
    window = _tau_window(v_F, params.v_min, 0.0, params.fez_length, params,
                         extended=True)
    if window is None:
        return params.fez_length / v_F
    return window[1]


def _segments_for(v_F: float, upsilon: float, tau: float, t_F: float,
                  f_bar: float) -> list[tuple[float, float]]:
    """Recover the (control, duration) pieces achieving (tau, upsilon)."""
    dt = tau - t_F
    if abs(upsilon - v_F) < 1e-12:
        return [(0.0, dt)]
    u = (upsilon - v_F) ** 2 / (2.0 * upsilon * (dt - f_bar / upsilon))
    t_adjust = (upsilon - v_F) / u
    t_cruise = max(dt - t_adjust, 0.0)
    segments = [(u, t_adjust)]
    if t_cruise > 1e-12:
        segments.append((0.0, t_cruise))
    return segments


def _batch(taus: np.ndarray, upss: np.ndarray, ctx: FezContext,
           params: SystemParams):
    """Kernel evaluation with per-candidate predecessor lookup by entry time."""
    from .kernels import evaluate_candidates
    n = taus.size
    if ctx.committed_tau.size:
        idx = np.searchsorted(ctx.committed_tau, taus, side="right") - 1
        has = idx >= 0
        safe = np.maximum(idx, 0)
        pred_tf = np.where(has, ctx.committed_tf[safe], np.nan)
        pred_vm = np.where(has, ctx.committed_vm[safe], 1.0)
        pred_tm = np.where(has, ctx.committed_tm[safe], 0.0)
        spacing = np.where(has, ctx.committed_spacing[safe], 0.0)
    else:
        pred_tf = np.full(n, np.nan)
        pred_vm = np.ones(n)
        pred_tm = np.zeros(n)
        spacing = np.zeros(n)
    k = ctx.leader
    if k is not None:
        leader_args = (1, k.a, k.b, k.c, k.d, k.tm, k.vm, k.L)
    else:
        leader_args = (0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0)
    return evaluate_candidates(
        np.ascontiguousarray(taus, dtype=float),
        np.ascontiguousarray(upss, dtype=float),
        pred_tf, pred_vm, pred_tm, spacing, *leader_args,
        params.L, params.S, params.delta, params.v_min, params.v_max,
        params.u_min, params.u_max)


def _pred_at(tau: float, ctx: FezContext) -> tuple[ScheduleAssignment | None,
                                                   SubsetLabel | None]:
    """Queue predecessor a vehicle entering at tau would have."""
    if not ctx.committed_tau.size:
        return None, None
    idx = int(np.searchsorted(ctx.committed_tau, tau, side="right")) - 1
    if idx < 0:
        return None, None
    pred = ScheduleAssignment(tf=float(ctx.committed_tf[idx]),
                              tm=float(ctx.committed_tm[idx]),
                              vm=float(ctx.committed_vm[idx]),
                              case_tag=CaseTag.FIRST, bound_active=False)
    return pred, ctx.committed_labels[idx]


def _verdict_at(tau: float, upsilon: float, ctx: FezContext,
                params: SystemParams):
    pred, label = _pred_at(tau, ctx)
    scalar_ctx = FeasibilityContext(leader=ctx.leader, pred=pred,
                                    label=label, params=params)
    return is_feasible(tau, upsilon, scalar_ctx)


def plan_fez_control(vehicle, ctx: FezContext, params: SystemParams,
                     n_upsilon: int = 50, n_tau: int = 50,
                     refine_iters: int = 30) -> FezPlan:
    """Plan the zone traversal so the CZ entry pair is admissible.

    Candidates are (tau, upsilon) pairs reachable with one constant-control
    adjustment followed by a cruise. Among admissible candidates the plan
    prefers the earliest entry (then the highest entry speed), refined by
    bisection toward the admissibility boundary; candidates whose CZ run
    stays within speed/control bounds outrank those that would need a
    constrained-motion solver. A lane with no vehicle ahead keeps the plain
    cruise. If nothing is admissible the plan falls back to the guaranteed
    worst-case target: enter at v_min, timed from the leader's CZ entry.
    """
    if not check_parameter_condition(params):
        raise FezGuaranteeError(
            "parameter condition fails: the zone cannot guarantee admissible "
            "entries; adjust v_min, v_max, u_B, or delta")
    f_bar = params.fez_length
    t_F, v_F = vehicle.t_F, vehicle.v
    cruise_tau = t_F + f_bar / v_F

    if ctx.leader is None and cruise_tau >= ctx.lane_floor:
        return FezPlan(vehicle_id=vehicle.id, segments=[(0.0, f_bar / v_F)],
                       tau=cruise_tau, upsilon=v_F, feasible=True)

    ups_values = np.unique(np.append(
        np.linspace(params.v_min, params.v_max, n_upsilon), v_F))
    cand_tau: list[np.ndarray] = []
    cand_ups: list[np.ndarray] = []
    windows: dict[float, tuple[float, float]] = {}
    for ups in ups_values:
        window = _tau_window(v_F, float(ups), t_F, f_bar, params, extended=False)
        if window is not None and window[1] < ctx.lane_floor:
            window = _tau_window(v_F, float(ups), t_F, f_bar, params,
                                 extended=True)
        if window is None:
            continue
        lo = max(window[0], ctx.lane_floor)
        hi = window[1]
        if lo > hi:
            continue
        windows[float(ups)] = (lo, hi)
        taus = np.linspace(lo, hi, n_tau) if hi > lo else np.array([lo])
        cand_tau.append(taus)
        cand_ups.append(np.full(taus.size, ups))

    best: tuple[float, float] | None = None
    if cand_tau:
        taus = np.concatenate(cand_tau)
        upss = np.concatenate(cand_ups)
        s_star, _, _, _, feas, status = _batch(taus, upss, ctx, params)
        tiers = [(feas.astype(bool) & (status == 0), True),
                 (feas.astype(bool), False)]
        for tier, need_support in tiers:
            if not tier.any():
                continue
            order = np.lexsort((-upss[tier], taus[tier]))
            pick = np.flatnonzero(tier)[order[0]]
            best = (float(taus[pick]), float(upss[pick]))
            best = _refine(best, need_support, windows, ctx, params)
            break

    if best is None:
        best = _fallback_target(v_F, t_F, f_bar, ctx, params)

    tau_star, ups_star = best
    segments = _segments_for(v_F, ups_star, tau_star, t_F, f_bar)
    verdict = _verdict_at(tau_star, ups_star, ctx, params)
    return FezPlan(vehicle_id=vehicle.id, segments=segments, tau=tau_star,
                   upsilon=ups_star, feasible=verdict.feasible)


def _refine(best: tuple[float, float], need_support: bool,
            windows: dict[float, tuple[float, float]], ctx: FezContext,
            params: SystemParams, iters: int = 30) -> tuple[float, float]:
    """Bisect the entry time toward the earliest admissible value at the
    chosen entry speed, keeping the admissible end of the bracket."""
    tau_star, ups_star = best
    window = windows.get(ups_star)
    if window is None or tau_star <= window[0]:
        return best

    def admissible(tau: float) -> bool:
        s, _, _, _, feas, status = _batch(np.array([tau]),
                                          np.array([ups_star]), ctx, params)
        if not bool(feas[0]):
            return False
        return not (need_support and status[0] != 0)

    lo, hi = window[0], tau_star
    if admissible(lo):
        return lo, ups_star
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if admissible(mid):
            hi = mid
        else:
            lo = mid
    return hi, ups_star


def _fallback_target(v_F: float, t_F: float, f_bar: float, ctx: FezContext,
                     params: SystemParams) -> tuple[float, float]:
    """Guaranteed worst-case entry: v_min, timed from the leader's CZ entry,
    clamped into the window reachable from the current state."""
    ups = params.v_min
    if ctx.leader is not None:
        tau_target = ctx.leader.t0 + (params.v_min - params.v_max) / params.u_B
    else:
        tau_target = t_F + f_bar / max(v_F, params.v_min)
    window = _tau_window(v_F, ups, t_F, f_bar, params, extended=False)
    if window is None or window[1] < max(tau_target, ctx.lane_floor):
        extended = _tau_window(v_F, ups, t_F, f_bar, params, extended=True)
        if extended is not None:
            window = extended
    if window is None:
        # upsilon = v_min unreachable within the zone; enter at the earliest
        # reachable time at the closest reachable speed
        return t_F + f_bar / v_F, v_F
    tau = min(max(tau_target, window[0], ctx.lane_floor), window[1])
    return tau, ups
