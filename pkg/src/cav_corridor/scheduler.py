"""Queue scheduling: merging-zone entry/exit times and speeds.

Each vehicle's MZ exit time is the larger of a physical lower bound (the
fastest admissible run through the control zone) and a precedence candidate
derived from its queue predecessor's assignment. The MZ speed is inherited
from the predecessor unless the lower bound is the binding term.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import ScheduleInfeasibleError
from .types import CaseTag, SubsetLabel, SystemParams


@dataclass(frozen=True)
class ScheduleAssignment:
    """Terminal assignment for one vehicle at one intersection.

    ``tf`` is the MZ exit time, ``tm = tf - S/vm`` the MZ entry time, ``vm``
    the constant speed held inside the MZ. ``bound_active`` records whether
    the physical lower bound (not the predecessor candidate) set ``tf``.
    """

    tf: float
    tm: float
    vm: float
    case_tag: CaseTag
    bound_active: bool


def exit_lower_bound(t0: float, v0: float, params: SystemParams) -> tuple[float, float]:
    """Earliest admissible MZ exit time from CZ entry state (t0, v0).

    The bounding run applies u_max until v_max is reached, cruises the rest
    of the CZ, and crosses the MZ at the attained speed. If the CZ is too
    short to reach v_max, the run accelerates throughout and crosses the MZ
    at the speed attained at its end. Returns (tc, vm_c) where vm_c is the
    MZ speed of the bounding run.
    """
    L, S = params.L, params.S
    v_peak_sq = 2.0 * L * params.u_max + v0 * v0
    if v_peak_sq >= params.v_max ** 2:
        tc = (t0 + (L + S) / params.v_max
              + (params.v_max - v0) ** 2 / (2.0 * params.u_max * params.v_max))
        return tc, params.v_max
    vr = math.sqrt(v_peak_sq)
    return t0 + (vr - v0) / params.u_max + S / vr, vr


def spacing_for_label(label: SubsetLabel, params: SystemParams) -> float:
    """Clearance distance the predecessor must put behind itself before the
    follower may exit: delta for a same-lane predecessor, S for a laterally
    conflicting one, zero otherwise."""
    if label is SubsetLabel.L:
        return params.delta
    if label is SubsetLabel.C:
        return params.S
    return 0.0


def assign(i: int,
           label: SubsetLabel | None,
           pred: ScheduleAssignment | None,
           t0: float,
           v0: float,
           params: SystemParams) -> ScheduleAssignment:
    """Assignment for queue position i entering the CZ at (t0, v0).

    The first vehicle takes the lower bound directly. Later vehicles take
    the larger of the lower bound and the label-specific candidate: the
    predecessor's exit time (labels R and O), or that plus the time to put
    delta (label L) or S (label C) of road behind it at its exit speed.
    The exit time is additionally floored so MZ entries stay in queue order.
    """
    tc, vm_c = exit_lower_bound(t0, v0, params)
    if i == 1 or pred is None or label is None:
        tf, vm, case, bound = tc, vm_c, CaseTag.FIRST, True
    else:
        if label is SubsetLabel.L:
            case = CaseTag.L
        elif label is SubsetLabel.C:
            case = CaseTag.C
        else:
            case = CaseTag.RO
        candidate = pred.tf + spacing_for_label(label, params) / pred.vm
        bound = tc > candidate
        tf = tc if bound else candidate
        vm = vm_c if bound else pred.vm
    if not (params.v_min - 1e-9 <= vm <= params.v_max + 1e-9):
        raise ScheduleInfeasibleError(
            f"queue position {i}: assigned MZ speed {vm:.6g} outside "
            f"[{params.v_min:.6g}, {params.v_max:.6g}]")
    if pred is not None:
        floor = pred.tm + params.S / vm
        if tf < floor:
            tf = floor
    tm = tf - params.S / vm
    return ScheduleAssignment(tf=tf, tm=tm, vm=vm, case_tag=case, bound_active=bound)
