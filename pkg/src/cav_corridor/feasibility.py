"""Rear-end gap analysis between a leader and its same-lane follower.

The gap s(t) = p_leader(t) - p_follower(t) over the follower's CZ horizon is
piecewise cubic: one piece while both run their CZ cubics, a second once the
leader has entered the MZ and its position is the cruise line. Minimizing the
pieces decides whether a candidate CZ entry (tau, upsilon) keeps s(t) >= delta
throughout [tau, tm] and therefore whether that entry is admissible.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import (DegenerateHorizonError, EmptyOverlapError,
                     ScheduleInfeasibleError)
from .optctrl import OptimalProfile, check_constraints, solve_profile
from .scheduler import ScheduleAssignment, assign, spacing_for_label
from .types import CaseTag, SubsetLabel, SystemParams

_TOL = 1e-9


class GapPhase(Enum):
    CZ_PHASE = "CZ_PHASE"
    MZ_PHASE = "MZ_PHASE"


class GapCase(Enum):
    AT_TAU = "AT_TAU"
    AT_TKM = "AT_TKM"
    AT_TIM = "AT_TIM"
    INTERIOR_CZ = "INTERIOR_CZ"
    INTERIOR_MZ = "INTERIOR_MZ"


@dataclass(frozen=True)
class GapPiece:
    """One cubic piece of the gap, s(t) = A t^3 + B t^2 + C t + D on [t_lo, t_hi]."""

    A: float
    B: float
    C: float
    D: float
    t_lo: float
    t_hi: float
    phase: GapPhase

    def value(self, t):
        return ((self.A * t + self.B) * t + self.C) * t + self.D


@dataclass(frozen=True)
class GapMinimum:
    s_star: float
    t_star: float
    case_tag: GapCase


def gap_pieces(leader: OptimalProfile,
               follower: OptimalProfile) -> list[GapPiece]:
    """Gap pieces over [follower.t0, follower.tm].

    While the leader is still in its CZ the piece is the difference of two
    cubics; after the leader's MZ entry its position is L + vm*(t - tm) and
    the piece keeps only the follower's cubic terms.
    """
    if follower.tm <= leader.t0:
        raise EmptyOverlapError(
            f"follower horizon ends at {follower.tm:.6g} before leader "
            f"enters at {leader.t0:.6g}")
    if follower.t0 < leader.t0 - _TOL:
        raise ValueError("follower must enter the CZ at or after the leader")
    pieces: list[GapPiece] = []
    cz_hi = min(leader.tm, follower.tm)
    if follower.t0 < cz_hi - 1e-12:
        pieces.append(GapPiece(
            A=(leader.a - follower.a) / 6.0,
            B=0.5 * (leader.b - follower.b),
            C=leader.c - follower.c,
            D=leader.d - follower.d,
            t_lo=follower.t0, t_hi=cz_hi, phase=GapPhase.CZ_PHASE))
    mz_lo = max(follower.t0, leader.tm)
    if follower.tm > mz_lo + 1e-12:
        pieces.append(GapPiece(
            A=-follower.a / 6.0,
            B=-0.5 * follower.b,
            C=leader.vm - follower.c,
            D=(leader.L - leader.vm * leader.tm) - follower.d,
            t_lo=mz_lo, t_hi=follower.tm, phase=GapPhase.MZ_PHASE))
    if not pieces:
        # zero-length horizon collapses to a single evaluation point
        pieces.append(GapPiece(
            A=(leader.a - follower.a) / 6.0,
            B=0.5 * (leader.b - follower.b),
            C=leader.c - follower.c,
            D=leader.d - follower.d,
            t_lo=follower.t0, t_hi=follower.tm, phase=GapPhase.CZ_PHASE))
    return pieces


def _stationary_points(piece: GapPiece) -> list[float]:
    """Interior minimizer candidates: real roots of s'(t) with s''(t) >= 0.

    The quadratic 3A t^2 + 2B t + C is solved in the cancellation-safe form:
    the larger-magnitude root comes from the direct formula, the other from
    the root product. Near-zero A degrades to the linear stationary point.
    """
    A3, B2, C = 3.0 * piece.A, 2.0 * piece.B, piece.C
    out: list[float] = []
    if abs(A3) < 1e-12:
        if abs(B2) > 1e-15:
            t = -C / B2
            if piece.t_lo < t < piece.t_hi and B2 >= 0.0:
                out.append(t)
        return out
    disc = B2 * B2 - 4.0 * A3 * C
    if disc < 0.0:
        return out
    sq = np.sqrt(disc)
    q = -0.5 * (B2 + np.copysign(sq, B2)) if B2 != 0.0 else -0.5 * sq
    roots = [q / A3]
    if q != 0.0:
        roots.append(C / q)
    for t in roots:
        if piece.t_lo < t < piece.t_hi and 6.0 * piece.A * t + 2.0 * piece.B >= 0.0:
            out.append(t)
    return out


def min_gap(pieces: list[GapPiece]) -> GapMinimum:
    """Global minimum of the piecewise gap with the location classified.

    Candidates are the interval endpoints and the admissible stationary
    points; the earliest time attaining the minimum wins ties.
    """
    if not pieces:
        raise ValueError("min_gap needs at least one piece")
    candidates: list[tuple[float, GapPiece]] = []
    for piece in pieces:
        times = [piece.t_lo, piece.t_hi] + _stationary_points(piece)
        candidates.extend((t, piece) for t in times)
    candidates.sort(key=lambda item: item[0])
    best_t, best_piece = candidates[0]
    best_s = best_piece.value(best_t)
    for t, piece in candidates[1:]:
        s = piece.value(t)
        if s < best_s - 1e-15:
            best_t, best_piece, best_s = t, piece, s
    tau = pieces[0].t_lo
    boundary = None
    for piece in pieces:
        if piece.phase is GapPhase.MZ_PHASE:
            boundary = piece.t_lo
            break
    else:
        if len(pieces) == 1 and pieces[0].phase is GapPhase.CZ_PHASE:
            boundary = None
    if abs(best_t - tau) <= _TOL:
        tag = GapCase.AT_TAU
    elif boundary is not None and abs(best_t - boundary) <= _TOL:
        tag = GapCase.AT_TKM
    elif abs(best_t - pieces[-1].t_hi) <= _TOL:
        # window end: the exit-time rule pins the terminal gap here when the
        # predecessor candidate binds
        tag = GapCase.AT_TIM
    elif best_piece.phase is GapPhase.CZ_PHASE:
        tag = GapCase.INTERIOR_CZ
    else:
        tag = GapCase.INTERIOR_MZ
    return GapMinimum(s_star=float(best_s), t_star=float(best_t), case_tag=tag)


def violation_intervals(pieces: list[GapPiece], delta: float,
                        tol: float = 1e-6) -> list[tuple[float, float]]:
    """Maximal subintervals where the gap is below delta - tol.

    The slack keeps plans that ride the admissibility boundary (the entry
    planner bisects onto gap == delta) from being reported as conflicts
    over float-level grazing.
    """
    level = delta - tol
    out: list[tuple[float, float]] = []
    for piece in pieces:
        breaks = [piece.t_lo, piece.t_hi]
        coeffs = [piece.A, piece.B, piece.C, piece.D - level]
        while len(coeffs) > 1 and abs(coeffs[0]) < 1e-15:
            coeffs = coeffs[1:]
        if len(coeffs) > 1:
            for r in np.roots(coeffs):
                if abs(r.imag) < 1e-9 and piece.t_lo < r.real < piece.t_hi:
                    breaks.append(float(r.real))
        breaks = sorted(set(breaks))
        for a, b in zip(breaks[:-1], breaks[1:]):
            if piece.value(0.5 * (a + b)) < level:
                if out and a <= out[-1][1] + 1e-9:
                    out[-1] = (out[-1][0], b)
                else:
                    out.append((a, b))
    return out


def t_k_delta(leader: OptimalProfile, delta: float) -> float:
    """Earliest time at which the leader has put delta meters behind the CZ
    entry line, i.e. the smallest root of p(t) = delta at or after t0."""
    if not 0.0 <= delta < leader.L + leader.S:
        raise ValueError("delta must lie in [0, L + S)")
    coeffs = [leader.a / 6.0, 0.5 * leader.b, leader.c, leader.d - delta]
    roots = [r.real for r in np.roots(coeffs)
             if abs(r.imag) < 1e-9
             and leader.t0 - _TOL <= r.real <= leader.tm + _TOL]
    if roots:
        t = min(roots)
        deriv = [0.5 * leader.a, leader.b, leader.c]
        for _ in range(3):
            slope = float(np.polyval(deriv, t))
            if abs(slope) < 1e-12:
                break
            t -= float(np.polyval(coeffs, t)) / slope
        return float(min(max(t, leader.t0), leader.tm))
    # delta is reached on the MZ cruise segment
    return leader.tm + (delta - leader.L) / leader.vm


@dataclass(frozen=True)
class FeasibilityContext:
    """Inputs fixed while sweeping candidate entries (tau, upsilon).

    ``leader`` is the physically-ahead vehicle on the same lane (None when
    the lane is clear); ``pred``/``label`` describe the queue predecessor
    used to derive the follower's schedule, which may be a different vehicle.
    """

    leader: OptimalProfile | None
    pred: ScheduleAssignment | None
    label: SubsetLabel | None
    params: SystemParams

    @classmethod
    def behind_leader(cls, leader: OptimalProfile, params: SystemParams,
                      label: SubsetLabel = SubsetLabel.L) -> "FeasibilityContext":
        """Common case: the schedule predecessor is the same-lane leader."""
        pred = ScheduleAssignment(tf=leader.tf, tm=leader.tm, vm=leader.vm,
                                  case_tag=CaseTag.FIRST, bound_active=False)
        return cls(leader=leader, pred=pred, label=label, params=params)


@dataclass(frozen=True)
class FeasibilityVerdict:
    """Outcome of testing one candidate CZ entry.

    ``feasible`` is the rear-end test s_star >= delta on the unconstrained
    trajectories. ``supported`` is False when either vehicle's trajectory
    activates a speed/control bound, in which case the analysis does not
    cover the constrained motion and the verdict says so in ``reason``.
    """

    feasible: bool
    supported: bool
    reason: str
    minimum: GapMinimum | None
    schedule: ScheduleAssignment | None
    profile: OptimalProfile | None

    def __bool__(self) -> bool:
        return self.feasible


def is_feasible(tau: float, upsilon: float,
                ctx: FeasibilityContext) -> FeasibilityVerdict:
    """Test whether entering the CZ at (tau, upsilon) keeps the gap safe.

    The follower's schedule is recomputed for each candidate because the
    physical lower bound moves with the entry state; the follower profile is
    then solved and the gap minimized over [tau, tm].
    """
    params = ctx.params
    i = 1 if ctx.pred is None else 2
    try:
        sched = assign(i, ctx.label, ctx.pred, tau, upsilon, params)
        profile = solve_profile(tau, upsilon, sched.tm, sched.vm,
                                params.L, params.S)
    except (ScheduleInfeasibleError, DegenerateHorizonError) as exc:
        return FeasibilityVerdict(feasible=False, supported=False,
                                  reason=str(exc), minimum=None,
                                  schedule=None, profile=None)
    constrained = bool(check_constraints(profile, params))
    if ctx.leader is not None:
        constrained = constrained or bool(check_constraints(ctx.leader, params))
    supported = not constrained
    reason = "" if supported else "constrained-case unsupported"
    if ctx.leader is None:
        return FeasibilityVerdict(feasible=True, supported=supported,
                                  reason=reason, minimum=None,
                                  schedule=sched, profile=profile)
    minimum = min_gap(gap_pieces(ctx.leader, profile))
    feasible = minimum.s_star >= params.delta - _TOL
    return FeasibilityVerdict(feasible=feasible, supported=supported,
                              reason=reason, minimum=minimum,
                              schedule=sched, profile=profile)


@dataclass
class FeasibilityRaster:
    """Dense gap minima over a (tau, upsilon) grid plus the delta level set.

    Arrays are indexed [i_tau, j_upsilon]. ``status`` is 0 for clean cells,
    1 where a speed/control bound activates (gap values still computed from
    the unconstrained trajectories), 2 where the schedule degenerates and no
    gap value exists. ``boundary`` holds polylines of (tau, upsilon) points
    on the s_star = delta level set.
    """

    tau: np.ndarray
    upsilon: np.ndarray
    s_star: np.ndarray
    t_star: np.ndarray
    tm: np.ndarray
    vm: np.ndarray
    feasible: np.ndarray
    status: np.ndarray
    delta: float
    boundary: list[np.ndarray]


def _kernel_args(ctx: FeasibilityContext, n: int):
    """Broadcast the fixed context into the per-candidate arrays the batch
    kernel expects."""
    if ctx.pred is not None:
        pred_tf = np.full(n, ctx.pred.tf)
        pred_vm = np.full(n, ctx.pred.vm)
        pred_tm = np.full(n, ctx.pred.tm)
        spacing = np.full(n, spacing_for_label(ctx.label, ctx.params))
    else:
        pred_tf = np.full(n, np.nan)
        pred_vm = np.zeros(n)
        pred_tm = np.zeros(n)
        spacing = np.zeros(n)
    return pred_tf, pred_vm, pred_tm, spacing


def _batch_s_star(tau: np.ndarray, ups: np.ndarray,
                  ctx: FeasibilityContext) -> np.ndarray:
    from .kernels import evaluate_candidates
    k = ctx.leader
    pred_tf, pred_vm, pred_tm, spacing = _kernel_args(ctx, tau.size)
    p = ctx.params
    s_star, _, _, _, _, _ = evaluate_candidates(
        np.ascontiguousarray(tau, dtype=float),
        np.ascontiguousarray(ups, dtype=float),
        pred_tf, pred_vm, pred_tm, spacing,
        1, k.a, k.b, k.c, k.d, k.tm, k.vm, k.L,
        p.L, p.S, p.delta, p.v_min, p.v_max, p.u_min, p.u_max)
    return s_star


_SEGMENT_TABLE: dict[int, list[tuple[str, str]]] = {
    1: [("left", "bottom")], 2: [("bottom", "right")], 3: [("left", "right")],
    4: [("right", "top")], 6: [("bottom", "top")], 7: [("left", "top")],
    8: [("left", "top")], 9: [("bottom", "top")], 11: [("right", "top")],
    12: [("left", "right")], 13: [("bottom", "right")], 14: [("left", "bottom")],
}


def _extract_boundary(tau: np.ndarray, ups: np.ndarray, s: np.ndarray,
                      delta: float, ctx: FeasibilityContext,
                      refine_iters: int = 30) -> list[np.ndarray]:
    """Marching squares on the admissibility flip, refined along grid edges
    by bisection of the true gap minimum.

    The level is the verdict threshold delta - tol, not delta itself: when
    the predecessor exit-time term binds, the terminal gap sits at delta
    exactly over the whole admissible plateau, so a plain delta contour
    would fire on float noise across it instead of tracing the flip.
    """
    n_tau, n_ups = s.shape
    level = delta - _TOL
    inside = s >= level
    crossings: dict[tuple, tuple[np.ndarray, np.ndarray]] = {}
    segments: list[tuple[tuple, tuple]] = []

    def edge_key(side: str, i: int, j: int) -> tuple:
        if side == "bottom":
            return ("t", i, j)
        if side == "top":
            return ("t", i, j + 1)
        if side == "left":
            return ("u", i, j)
        return ("u", i + 1, j)

    def register(key: tuple) -> None:
        if key in crossings:
            return
        kind, i, j = key
        if kind == "t":
            a = np.array([tau[i], ups[j]])
            b = np.array([tau[i + 1], ups[j]])
        else:
            a = np.array([tau[i], ups[j]])
            b = np.array([tau[i], ups[j + 1]])
        crossings[key] = (a, b)

    for i in range(n_tau - 1):
        for j in range(n_ups - 1):
            corner_vals = (s[i, j], s[i + 1, j], s[i + 1, j + 1], s[i, j + 1])
            if any(np.isnan(v) for v in corner_vals):
                continue
            code = (int(inside[i, j]) | int(inside[i + 1, j]) << 1
                    | int(inside[i + 1, j + 1]) << 2 | int(inside[i, j + 1]) << 3)
            if code in (0, 15):
                continue
            if code in (5, 10):
                center_in = float(np.mean(corner_vals)) >= level
                if code == 5:
                    pairs = ([("left", "top"), ("bottom", "right")] if center_in
                             else [("left", "bottom"), ("right", "top")])
                else:
                    pairs = ([("left", "bottom"), ("right", "top")] if center_in
                             else [("left", "top"), ("bottom", "right")])
            else:
                pairs = _SEGMENT_TABLE[code]
            for side_a, side_b in pairs:
                ka, kb = edge_key(side_a, i, j), edge_key(side_b, i, j)
                register(ka)
                register(kb)
                segments.append((ka, kb))

    if not crossings:
        return []

    keys = list(crossings.keys())
    a_pts = np.array([crossings[k][0] for k in keys])
    b_pts = np.array([crossings[k][1] for k in keys])

    def node_value(pt_tau, pt_ups):
        return _batch_s_star(pt_tau, pt_ups, ctx) - level

    f_a = node_value(a_pts[:, 0], a_pts[:, 1])
    f_b = node_value(b_pts[:, 0], b_pts[:, 1])
    # where the true values fail to straddle (rare, from grid interpolation
    # error) fall back to the grid-linear crossing and skip bisection
    straddle = (f_a <= 0) != (f_b <= 0)
    lo, hi = a_pts.copy(), b_pts.copy()
    f_lo = f_a.copy()
    for _ in range(refine_iters):
        mid = 0.5 * (lo + hi)
        f_mid = node_value(mid[:, 0], mid[:, 1])
        same = (f_mid <= 0) == (f_lo <= 0)
        move_lo = same & straddle
        move_hi = ~same & straddle
        lo[move_lo] = mid[move_lo]
        f_lo[move_lo] = f_mid[move_lo]
        hi[move_hi] = mid[move_hi]
    refined = 0.5 * (lo + hi)
    for idx, key in enumerate(keys):
        if not straddle[idx]:
            kind, i, j = key
            if kind == "t":
                va, vb = s[i, j], s[i + 1, j]
            else:
                va, vb = s[i, j], s[i, j + 1]
            x = 0.5 if vb == va else float(np.clip((level - va) / (vb - va), 0, 1))
            refined[idx] = a_pts[idx] + x * (b_pts[idx] - a_pts[idx])
    points = {key: refined[idx] for idx, key in enumerate(keys)}

    # chain shared-endpoint segments into polylines
    adjacency: dict[tuple, list[int]] = {}
    for si, (ka, kb) in enumerate(segments):
        adjacency.setdefault(ka, []).append(si)
        adjacency.setdefault(kb, []).append(si)
    used = [False] * len(segments)
    polylines: list[np.ndarray] = []
    for start in range(len(segments)):
        if used[start]:
            continue
        used[start] = True
        ka, kb = segments[start]
        chain = [ka, kb]
        for endpoint, append in ((kb, True), (ka, False)):
            current = endpoint
            while True:
                nxt = [si for si in adjacency.get(current, []) if not used[si]]
                if not nxt:
                    break
                si = nxt[0]
                used[si] = True
                a, b = segments[si]
                current = b if a == current else a
                if append:
                    chain.append(current)
                else:
                    chain.insert(0, current)
        polylines.append(np.array([points[k] for k in chain]))
    return polylines


def feasibility_grid(ctx: FeasibilityContext,
                     tau_range: tuple[float, float],
                     upsilon_range: tuple[float, float],
                     n_tau: int = 200,
                     n_upsilon: int = 200) -> FeasibilityRaster:
    """Dense sweep of candidate entries with the delta level set extracted.

    Every cell gets the follower schedule, profile, and gap minimum for its
    (tau, upsilon); the boundary polylines are linear level-set crossings
    refined against the true gap function.
    """
    if ctx.leader is None:
        raise ValueError("feasibility_grid requires a leader in the context")
    from .kernels import evaluate_candidates
    p = ctx.params
    k = ctx.leader
    tau = np.linspace(tau_range[0], tau_range[1], n_tau)
    ups = np.linspace(upsilon_range[0], upsilon_range[1], n_upsilon)
    TT, UU = np.meshgrid(tau, ups, indexing="ij")
    flat_tau = np.ascontiguousarray(TT.ravel())
    flat_ups = np.ascontiguousarray(UU.ravel())
    pred_tf, pred_vm, pred_tm, spacing = _kernel_args(ctx, flat_tau.size)
    s_star, t_star, tm, vm, feas, status = evaluate_candidates(
        flat_tau, flat_ups, pred_tf, pred_vm, pred_tm, spacing,
        1, k.a, k.b, k.c, k.d, k.tm, k.vm, k.L,
        p.L, p.S, p.delta, p.v_min, p.v_max, p.u_min, p.u_max)
    shape = (n_tau, n_upsilon)
    raster = FeasibilityRaster(
        tau=tau, upsilon=ups,
        s_star=s_star.reshape(shape), t_star=t_star.reshape(shape),
        tm=tm.reshape(shape), vm=vm.reshape(shape),
        feasible=feas.reshape(shape).astype(bool),
        status=status.reshape(shape), delta=p.delta, boundary=[])
    raster.boundary = _extract_boundary(tau, ups, raster.s_star, p.delta, ctx)
    return raster
