"""Per-intersection FIFO queues, predecessor classification, and the data
each vehicle can see while inside its control zone.

Single-writer model: one thread (the simulation loop) mutates the queues;
every query here is a pure read and safe to call between mutation steps.
"""

from __future__ import annotations

import numpy as np

from .errors import DuplicateVehicleError, InformationUnavailableError
from .optctrl import OptimalProfile
from .scheduler import ScheduleAssignment
from .types import InformationSet, Lane, Phase, SubsetLabel, SystemParams, Vehicle

_TOL = 1e-9


def relation_label(lane_i: Lane, lane_pred: Lane) -> SubsetLabel:
    """Label of a predecessor on ``lane_pred`` relative to a vehicle on
    ``lane_i``: same lane L, same road opposite direction O, crossing road C.
    (Same road, same direction, different lane would be R, which cannot
    occur with one lane per direction.)"""
    if lane_pred is lane_i:
        return SubsetLabel.L
    if lane_pred.road == lane_i.road:
        return SubsetLabel.O
    return SubsetLabel.C


def arrival_order(entries: list[tuple[float, int]],
                  rng: np.random.Generator) -> list[int]:
    """Keys ordered by arrival time with seeded random tie-breaking.

    Entries are (time, key) pairs; exact time ties are permuted with the
    supplied generator, so the outcome is stable for a fixed seed.
    """
    by_time: dict[float, list[int]] = {}
    for t, key in entries:
        by_time.setdefault(t, []).append(key)
    out: list[int] = []
    for t in sorted(by_time):
        group = by_time[t]
        if len(group) > 1:
            group = [group[j] for j in rng.permutation(len(group))]
        out.extend(group)
    return out


class Coordinator:
    """Queue bookkeeping for one or two intersections.

    Vehicles register on reaching the CZ boundary and receive 1-based queue
    indices in entry order. The physically-ahead vehicle is tracked per lane
    in the same order and dropped from the lane once it exits the MZ.
    """

    def __init__(self, params: SystemParams):
        self.params = params
        self._queues: dict[int, list[int]] = {1: [], 2: []}
        self._vehicles: dict[tuple[int, int], Vehicle] = {}
        self._lanes: dict[tuple[int, Lane], list[int]] = {}
        self._profiles: dict[tuple[int, int], OptimalProfile] = {}
        self._schedules: dict[tuple[int, int], ScheduleAssignment] = {}
        self._entry_speed: dict[tuple[int, int], float] = {}

    def count(self, z: int = 1) -> int:
        return len(self._queues[z])

    def register_arrival(self, t: float, vehicle: Vehicle, z: int = 1) -> int:
        """Append the vehicle to intersection z's queue; returns its index.

        Arrivals must come in non-decreasing entry time; simultaneous
        arrivals should be pre-ordered with ``arrival_order``.
        """
        key = (z, vehicle.id)
        if key in self._vehicles:
            raise DuplicateVehicleError(
                f"vehicle {vehicle.id} already registered at intersection {z}")
        queue = self._queues[z]
        if queue:
            last = self._vehicles[(z, queue[-1])].t0
            if t < last - 1e-12:
                raise ValueError(
                    f"arrival at t = {t:.6g} precedes the last registered "
                    f"entry at {last:.6g}")
        queue.append(vehicle.id)
        vehicle.t0 = t
        vehicle.phase = Phase.CZ
        vehicle.p = 0.0
        self._vehicles[key] = vehicle
        self._lanes.setdefault((z, vehicle.lane), []).append(vehicle.id)
        self._entry_speed[key] = vehicle.v
        return len(queue)

    def vehicle_at(self, i: int, z: int = 1) -> Vehicle:
        return self._vehicles[(z, self._queues[z][i - 1])]

    def classify_predecessor(self, i: int, z: int = 1) -> SubsetLabel | None:
        """Label of queue predecessor i-1 relative to vehicle i; None when
        i is first in the queue."""
        queue = self._queues[z]
        if not 1 <= i <= len(queue):
            raise ValueError(f"no vehicle at queue position {i}")
        if i == 1:
            return None
        me = self._vehicles[(z, queue[i - 1])]
        pred = self._vehicles[(z, queue[i - 2])]
        return relation_label(me.lane, pred.lane)

    def attach_schedule(self, vehicle_id: int, assignment: ScheduleAssignment,
                        z: int = 1) -> None:
        self._schedules[(z, vehicle_id)] = assignment
        veh = self._vehicles[(z, vehicle_id)]
        veh.tm = assignment.tm
        veh.tf = assignment.tf

    def attach_profile(self, vehicle_id: int, profile: OptimalProfile,
                       z: int = 1) -> None:
        self._profiles[(z, vehicle_id)] = profile

    def schedule_of(self, vehicle_id: int, z: int = 1) -> ScheduleAssignment | None:
        return self._schedules.get((z, vehicle_id))

    def profile_of(self, vehicle_id: int, z: int = 1) -> OptimalProfile | None:
        return self._profiles.get((z, vehicle_id))

    def lane_leader(self, vehicle_id: int, z: int = 1) -> int | None:
        """Identifier of the vehicle physically ahead on the same lane, or
        None when leading (leaders drop out once past the MZ)."""
        veh = self._vehicles[(z, vehicle_id)]
        members = self._lanes.get((z, veh.lane), [])
        idx = members.index(vehicle_id)
        return members[idx - 1] if idx > 0 else None

    def info_set(self, i: int, t: float, z: int = 1) -> InformationSet:
        """Everything vehicle i can see at time t while inside its CZ."""
        queue = self._queues[z]
        if not 1 <= i <= len(queue):
            raise InformationUnavailableError(f"no vehicle at queue position {i}")
        vid = queue[i - 1]
        veh = self._vehicles[(z, vid)]
        tm = veh.tm
        if veh.t0 is None or t < veh.t0 - _TOL or (tm is not None and t > tm + _TOL):
            raise InformationUnavailableError(
                f"vehicle {vid} is not inside its CZ at t = {t:.6g}")
        own = self._profiles.get((z, vid))
        if own is not None:
            p_i = float(own.position(min(t, own.tm)))
            v_i = float(own.speed(min(t, own.tm)))
        elif abs(t - veh.t0) <= _TOL:
            p_i, v_i = 0.0, self._entry_speed[(z, vid)]
        else:
            raise InformationUnavailableError(
                f"vehicle {vid} has no committed trajectory to evaluate "
                f"at t = {t:.6g}")
        k_id = self.lane_leader(vid, z)
        s = None
        if k_id is not None:
            k_prof = self._profiles.get((z, k_id))
            if k_prof is None:
                raise InformationUnavailableError(
                    f"leader {k_id} has no committed trajectory")
            s = float(k_prof.position(t)) - p_i
        label = self.classify_predecessor(i, z)
        sched = self._schedules.get((z, vid))
        pred_tf = pred_vf = None
        if i > 1:
            pred_sched = self._schedules.get((z, queue[i - 2]))
            if pred_sched is not None:
                pred_tf, pred_vf = pred_sched.tf, pred_sched.vm
        return InformationSet(p=p_i, v=v_i, subset_label=label, s=s,
                              k_id=k_id, tm=None if sched is None else sched.tm,
                              pred_tf=pred_tf, pred_vf=pred_vf)

    def mark_mz_exit(self, vehicle_id: int, z: int = 1) -> None:
        """Drop the vehicle from its lane's leader tracking after the MZ."""
        veh = self._vehicles[(z, vehicle_id)]
        members = self._lanes.get((z, veh.lane), [])
        if vehicle_id in members:
            members.remove(vehicle_id)
        veh.phase = Phase.POST_MZ
