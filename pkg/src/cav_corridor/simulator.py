"""Seeded stochastic corridor simulation.

Vehicles spawn at the enforcement-zone boundary from per-lane Poisson
streams, traverse the zone (planned when enforcement is on, at constant
speed when off), run their minimum-effort CZ trajectory, cruise the MZ, and
optionally continue to a second intersection at their MZ exit speed. All
dynamics are evaluated analytically from the committed piecewise profiles;
the fixed-step log only samples them, so no integration error accrues.

Determinism: every random draw comes from child streams of the config seed
in a fixed consumption order, so identical configs produce identical logs.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field, fields as dataclass_fields

import numpy as np

from .coordinator import Coordinator, arrival_order, relation_label
from .errors import ConfigError, FezGuaranteeError
from .feasibility import GapCase, gap_pieces, min_gap, violation_intervals
from .fez import FezContext, FezPlan, check_parameter_condition, \
    max_traverse_time, plan_fez_control
from .optctrl import ConstraintViolation, OptimalProfile, check_constraints, \
    solve_profile
from .scheduler import ScheduleAssignment, assign, spacing_for_label
from .types import Lane, Phase, SubsetLabel, SystemParams, Vehicle

LANES = (Lane.EB, Lane.WB, Lane.NB, Lane.SB)
_EPS = 1e-6
_ADMIT_STEP = 0.25
_ADMIT_RETRIES = 400


@dataclass(frozen=True)
class ArrivalSpec:
    """Explicit spawn: enforcement-zone entry time and speed on a lane."""

    lane: Lane
    t: float
    v: float


@dataclass
class ScenarioConfig:
    """Scenario inputs; JSON documents use these field names (the arrival
    rate may be spelled "lambda" in JSON since that is a Python keyword)."""

    params: SystemParams = field(default_factory=SystemParams)
    arrival_rate: float = 1.0
    n_vehicles: int = 20
    seed: int = 0
    fez_enabled: bool = True
    dt: float = 0.1
    intersections: int = 1
    corridor_gap: float = 70.0
    aggregate_arrivals: bool = False
    speed_range: tuple[float, float] | None = None
    arrivals: list[ArrivalSpec] | None = None

    def validate(self) -> None:
        if self.dt <= 0:
            raise ConfigError("dt must be positive")
        if self.arrivals is None and self.n_vehicles < 1:
            raise ConfigError("n_vehicles must be at least 1")
        if self.intersections not in (1, 2):
            raise ConfigError("intersections must be 1 or 2")
        if self.corridor_gap < 0:
            raise ConfigError("corridor_gap must be non-negative")
        if self.arrival_rate <= 0 and self.arrivals is None:
            raise ConfigError("arrival rate must be positive")
        if self.speed_range is not None and self.speed_range[0] > self.speed_range[1]:
            raise ConfigError("speed_range must be (low, high) with low <= high")

    def to_dict(self) -> dict:
        out = {
            "params": {f.name: getattr(self.params, f.name)
                       for f in dataclass_fields(self.params)},
            "lambda": self.arrival_rate,
            "n_vehicles": self.n_vehicles,
            "seed": self.seed,
            "fez_enabled": self.fez_enabled,
            "dt": self.dt,
            "intersections": self.intersections,
            "corridor_gap": self.corridor_gap,
            "aggregate_arrivals": self.aggregate_arrivals,
            "speed_range": None if self.speed_range is None else list(self.speed_range),
        }
        if self.arrivals is not None:
            out["arrivals"] = [{"lane": a.lane.value, "t": a.t, "v": a.v}
                               for a in self.arrivals]
        return out

    @classmethod
    def from_dict(cls, raw: dict) -> "ScenarioConfig":
        known = {"params", "lambda", "arrival_rate", "n_vehicles", "seed",
                 "fez_enabled", "dt", "intersections", "corridor_gap",
                 "aggregate_arrivals", "speed_range", "arrivals"}
        unknown = sorted(set(raw) - known)
        if unknown:
            raise ConfigError(f"unknown config key(s): {', '.join(unknown)}")
        if "lambda" in raw and "arrival_rate" in raw:
            raise ConfigError('give either "lambda" or "arrival_rate", not both')
        kwargs: dict = {}
        if "params" in raw:
            pfields = {f.name for f in dataclass_fields(SystemParams)}
            bad = sorted(set(raw["params"]) - pfields)
            if bad:
                raise ConfigError(f"unknown params key(s): {', '.join(bad)}")
            kwargs["params"] = SystemParams(**raw["params"])
        rate = raw.get("lambda", raw.get("arrival_rate"))
        if rate is not None:
            kwargs["arrival_rate"] = float(rate)
        for key in ("n_vehicles", "seed", "intersections"):
            if key in raw:
                kwargs[key] = int(raw[key])
        for key in ("dt", "corridor_gap"):
            if key in raw:
                kwargs[key] = float(raw[key])
        for key in ("fez_enabled", "aggregate_arrivals"):
            if key in raw:
                kwargs[key] = bool(raw[key])
        if raw.get("speed_range") is not None:
            lo, hi = raw["speed_range"]
            kwargs["speed_range"] = (float(lo), float(hi))
        if raw.get("arrivals") is not None:
            specs = []
            for entry in raw["arrivals"]:
                bad = sorted(set(entry) - {"lane", "t", "v"})
                if bad:
                    raise ConfigError(
                        f"unknown arrival key(s): {', '.join(bad)}")
                specs.append(ArrivalSpec(lane=Lane(entry["lane"]),
                                         t=float(entry["t"]),
                                         v=float(entry["v"])))
            kwargs["arrivals"] = specs
        config = cls(**kwargs)
        config.validate()
        return config


@dataclass
class LegRecord:
    """One vehicle's passage through one intersection."""

    intersection: int
    queue_index: int
    t0: float
    subset_label: SubsetLabel | None
    schedule: ScheduleAssignment
    profile: OptimalProfile
    constraint_flags: list[ConstraintViolation]
    violations: int = 0


@dataclass
class VehicleRecord:
    id: int
    lane: Lane
    t_F: float
    v_F: float
    fez_segments: list[tuple[float, float]]
    fez_plan: FezPlan | None
    tau: float
    upsilon: float
    legs: list[LegRecord] = field(default_factory=list)

    @property
    def end_time(self) -> float:
        return self.legs[-1].schedule.tf if self.legs else self.tau

    @property
    def violations(self) -> int:
        return sum(leg.violations for leg in self.legs)


@dataclass
class SafetyRecord:
    """Analytic gap summary for one follower/leader pair at one intersection."""

    intersection: int
    follower_id: int
    leader_id: int
    t_lo: float
    t_hi: float
    s_min: float
    t_min: float
    case_tag: GapCase
    intervals: list[tuple[float, float]]


@dataclass
class SimLog:
    config: ScenarioConfig
    records: list[VehicleRecord]
    safety: list[SafetyRecord]
    trajectory_rows: list[tuple]
    gap_rows: list[tuple]
    end_time: float


@dataclass
class SafetySummary:
    per_vehicle_min_gap: dict[int, float]
    violation_count: int
    histogram_counts: np.ndarray
    histogram_edges: np.ndarray


class _Committed:
    """Phase-1 commitment: entry pair plus the schedule chain prediction."""

    __slots__ = ("id", "lane", "t_F", "v_F", "tau", "upsilon", "segments",
                 "plan", "sched", "profile")

    def __init__(self, **kw):
        for name in self.__slots__:
            setattr(self, name, kw[name])


def _segment_time_to_reach(target_p: float, t_F: float, v_F: float,
                           segments: list[tuple[float, float]],
                           start_p: float) -> float:
    """First time the piecewise-constant-control motion reaches target_p,
    extrapolating at the final speed beyond the last segment."""
    p, v, t = start_p, v_F, t_F
    for u, dur in segments:
        p_end = p + (v + 0.5 * u * dur) * dur
        if p_end >= target_p - 1e-12:
            need = target_p - p
            if need <= 0:
                return t
            if abs(u) < 1e-12:
                return t + need / v
            disc = v * v + 2.0 * u * need
            dt = (-v + math.sqrt(max(disc, 0.0))) / u if u > 0 else \
                (2.0 * need) / (v + math.sqrt(max(disc, 0.0)))
            return t + dt
        p, v, t = p_end, v + u * dur, t + dur
    return t + (target_p - p) / v


def _sample_stream(config: ScenarioConfig):
    """Infinite (raw_time, lane, speed) spawn candidates in time order."""
    params = config.params
    children = np.random.SeedSequence(config.seed).spawn(8)
    lo, hi = config.speed_range or (params.v_min, params.v_max)
    speed_rng = np.random.default_rng(children[4])
    if config.aggregate_arrivals:
        time_rng = np.random.default_rng(children[6])
        lane_rng = np.random.default_rng(children[7])
        t = 0.0
        while True:
            t += time_rng.exponential(1.0 / config.arrival_rate)
            lane = LANES[lane_rng.integers(0, len(LANES))]
            yield t, lane, speed_rng.uniform(lo, hi)
    else:
        lane_rngs = [np.random.default_rng(children[j]) for j in range(4)]
        rate = config.arrival_rate / len(LANES)
        heap = []
        for j, lane in enumerate(LANES):
            heapq.heappush(heap, (lane_rngs[j].exponential(1.0 / rate), j))
        while True:
            t, j = heapq.heappop(heap)
            yield t, LANES[j], speed_rng.uniform(lo, hi)
            heapq.heappush(heap, (t + lane_rngs[j].exponential(1.0 / rate), j))


def _spawns(config: ScenarioConfig) -> list[ArrivalSpec]:
    if config.arrivals is not None:
        return sorted(config.arrivals, key=lambda a: (a.t, a.lane.value))
    stream = _sample_stream(config)
    out = []
    for _ in range(config.n_vehicles):
        t, lane, v = next(stream)
        out.append(ArrivalSpec(lane=lane, t=t, v=v))
    return out


def _commit_phase(config: ScenarioConfig) -> list[_Committed]:
    """Chronological spawn, deferral, and entry planning.

    Deferral keeps a spawn at least delta behind the last same-lane spawn
    and, with enforcement on, late enough that an entry after every
    already-committed entry stays kinematically possible. Committed entry
    times are strictly increasing in commit order, so each planner sees the
    final schedule chain of everything ahead of it and its rear-end test is
    exact, not a prediction that later commits could invalidate.
    """
    params = config.params
    f_bar = params.fez_length
    committed: list[_Committed] = []
    by_lane_last: dict[Lane, _Committed] = {}
    explicit = config.arrivals is not None

    next_id = 1
    for spec in _spawns(config):
        lane, t_F, v_F = spec.lane, spec.t, spec.v
        last = by_lane_last.get(lane)
        if last is not None and not explicit:
            t_gap = _segment_time_to_reach(-f_bar + params.delta, last.t_F,
                                           last.v_F, last.segments, -f_bar)
            t_F = max(t_F, t_gap)
        if config.fez_enabled and not explicit:
            # the zone can only deliver the guaranteed worst-case entry
            # (v_min, timed from the lane leader's CZ entry) if the vehicle
            # can dwell until it; hold the spawn back accordingly
            targets = []
            if last is not None:
                targets.append(last.tau
                               + (params.v_min - params.v_max) / params.u_B)
            if committed:
                targets.append(committed[-1].tau + _EPS)
            if targets:
                t_F = max(t_F, max(targets) - max_traverse_time(v_F, params))
        if config.fez_enabled:
            order = sorted(committed, key=lambda r: r.tau)
            floor = -math.inf if not order else order[-1].tau + _EPS
            ctx = FezContext(
                committed_tau=np.array([r.tau for r in order]),
                committed_tf=np.array([r.sched.tf for r in order]),
                committed_vm=np.array([r.sched.vm for r in order]),
                committed_tm=np.array([r.sched.tm for r in order]),
                committed_spacing=np.array(
                    [spacing_for_label(relation_label(lane, r.lane), params)
                     for r in order]),
                committed_labels=[relation_label(lane, r.lane) for r in order],
                leader=None if last is None else last.profile,
                lane_floor=floor)
            veh = Vehicle(id=next_id, intersection=1, lane=lane,
                          phase=Phase.FEZ, t_F=t_F, v=v_F, p=-f_bar)
            plan = plan_fez_control(veh, ctx, params)
            if not explicit:
                # admission control: an arrival whose whole reachable entry
                # window is infeasible (for example, an opposite-direction
                # chain pinning its exit onto the lane leader's) is held at
                # the zone entrance and retried; nonemptiness of the entry
                # region at late times guarantees termination
                for _ in range(_ADMIT_RETRIES):
                    if plan.feasible:
                        break
                    t_F += _ADMIT_STEP
                    veh.t_F = t_F
                    plan = plan_fez_control(veh, ctx, params)
                else:
                    raise FezGuaranteeError(
                        f"no admissible entry found for vehicle {next_id} "
                        f"after deferring its arrival "
                        f"{_ADMIT_RETRIES * _ADMIT_STEP:.0f} s")
            tau, upsilon, segments = plan.tau, plan.upsilon, plan.segments
        else:
            plan = None
            tau, upsilon = t_F + f_bar / v_F, v_F
            segments = [(0.0, f_bar / v_F)]
        # schedule chain entry recorded for later planners and for the log
        order = sorted(committed, key=lambda r: r.tau)
        taus = [r.tau for r in order]
        idx = int(np.searchsorted(np.array(taus), tau, side="right")) - 1 \
            if taus else -1
        if idx >= 0:
            pred_rec = order[idx]
            pred = pred_rec.sched
            label = relation_label(lane, pred_rec.lane)
        else:
            pred, label = None, None
        sched = assign(1 if pred is None else 2, label, pred, tau, upsilon,
                       params)
        profile = solve_profile(tau, upsilon, sched.tm, sched.vm,
                                params.L, params.S)
        rec = _Committed(id=next_id, lane=lane, t_F=t_F, v_F=v_F, tau=tau,
                         upsilon=upsilon, segments=segments, plan=plan,
                         sched=sched, profile=profile)
        committed.append(rec)
        by_lane_last[lane] = rec
        next_id += 1
    return committed


def run(config: ScenarioConfig) -> SimLog:
    """Execute the scenario and return the full analytic log."""
    config.validate()
    params = config.params
    if config.fez_enabled and not check_parameter_condition(params):
        raise FezGuaranteeError(
            "enforcement requested but the parameter condition fails; "
            "the zone cannot guarantee admissible entries")
    committed = _commit_phase(config)
    by_id = {rec.id: rec for rec in committed}
    records = {rec.id: VehicleRecord(
        id=rec.id, lane=rec.lane, t_F=rec.t_F, v_F=rec.v_F,
        fez_segments=rec.segments, fez_plan=rec.plan, tau=rec.tau,
        upsilon=rec.upsilon) for rec in committed}

    tie_rng = np.random.default_rng(np.random.SeedSequence(config.seed).spawn(8)[5])
    coord = Coordinator(params)
    order1 = arrival_order([(rec.tau, rec.id) for rec in committed], tie_rng)
    for vid in order1:
        rec = by_id[vid]
        veh = Vehicle(id=vid, intersection=1, lane=rec.lane, phase=Phase.FEZ,
                      t_F=rec.t_F, v=rec.upsilon, p=0.0)
        i = coord.register_arrival(rec.tau, veh, z=1)
        label = coord.classify_predecessor(i, z=1)
        pred = coord.schedule_of(coord.vehicle_at(i - 1, z=1).id, z=1) \
            if i > 1 else None
        sched = assign(i, label, pred, rec.tau, rec.upsilon, params)
        profile = solve_profile(rec.tau, rec.upsilon, sched.tm, sched.vm,
                                params.L, params.S)
        coord.attach_schedule(vid, sched, z=1)
        coord.attach_profile(vid, profile, z=1)
        records[vid].legs.append(LegRecord(
            intersection=1, queue_index=i, t0=rec.tau, subset_label=label,
            schedule=sched, profile=profile,
            constraint_flags=check_constraints(profile, params)))

    if config.intersections == 2:
        entries2 = []
        for vid, record in records.items():
            leg = record.legs[0]
            tau2 = leg.schedule.tf + config.corridor_gap / leg.schedule.vm
            entries2.append((tau2, vid))
        order2 = arrival_order(entries2, tie_rng)
        tau2_of = dict((vid, t) for t, vid in entries2)
        for vid in order2:
            record = records[vid]
            leg1 = record.legs[0]
            tau2 = tau2_of[vid]
            ups2 = leg1.schedule.vm
            veh = Vehicle(id=vid, intersection=2, lane=record.lane,
                          phase=Phase.CZ, t_F=None, v=ups2, p=0.0)
            i = coord.register_arrival(tau2, veh, z=2)
            label = coord.classify_predecessor(i, z=2)
            pred = coord.schedule_of(coord.vehicle_at(i - 1, z=2).id, z=2) \
                if i > 1 else None
            sched = assign(i, label, pred, tau2, ups2, params)
            profile = solve_profile(tau2, ups2, sched.tm, sched.vm,
                                    params.L, params.S)
            coord.attach_schedule(vid, sched, z=2)
            coord.attach_profile(vid, profile, z=2)
            record.legs.append(LegRecord(
                intersection=2, queue_index=i, t0=tau2, subset_label=label,
                schedule=sched, profile=profile,
                constraint_flags=check_constraints(profile, params)))

    safety = _safety_records(config, coord, records)
    trajectory_rows, gap_rows, end_time = _log_rows(config, records, safety)
    ordered = [records[rec.id] for rec in committed]
    return SimLog(config=config, records=ordered, safety=safety,
                  trajectory_rows=trajectory_rows, gap_rows=gap_rows,
                  end_time=end_time)


def _safety_records(config: ScenarioConfig, coord: Coordinator,
                    records: dict[int, VehicleRecord]) -> list[SafetyRecord]:
    params = config.params
    out: list[SafetyRecord] = []
    for z in range(1, config.intersections + 1):
        for lane in LANES:
            members = coord._lanes.get((z, lane), [])
            for leader_id, follower_id in zip(members[:-1], members[1:]):
                leader = coord.profile_of(leader_id, z)
                follower = coord.profile_of(follower_id, z)
                pieces = gap_pieces(leader, follower)
                gm = min_gap(pieces)
                intervals = violation_intervals(pieces, params.delta)
                leg = next(l for l in records[follower_id].legs
                           if l.intersection == z)
                leg.violations = len(intervals)
                out.append(SafetyRecord(
                    intersection=z, follower_id=follower_id,
                    leader_id=leader_id, t_lo=follower.t0, t_hi=follower.tm,
                    s_min=gm.s_star, t_min=gm.t_star, case_tag=gm.case_tag,
                    intervals=intervals))
    return out


def _vehicle_segments(config: ScenarioConfig, record: VehicleRecord):
    """Piecewise state segments in cumulative corridor position.

    Each entry is (t_lo, t_hi, eval_fn, phase); positions run from -fez_length
    at spawn through L+S at the first MZ exit and onward when a second
    intersection is configured.
    """
    params = config.params
    f_bar = params.fez_length
    segs = []
    t, p, v = record.t_F, -f_bar, record.v_F

    def const_u(p0, v0, u, t0):
        return lambda tt: (p0 + (v0 + 0.5 * u * (tt - t0)) * (tt - t0),
                           v0 + u * (tt - t0), u)

    for u, dur in record.fez_segments:
        segs.append((t, t + dur, const_u(p, v, u, t), Phase.FEZ))
        p += (v + 0.5 * u * dur) * dur
        v += u * dur
        t += dur
    offset = 0.0
    for leg in record.legs:
        prof = leg.profile
        segs.append((prof.t0, prof.tm,
                     lambda tt, pr=prof, off=offset: (
                         off + float(pr.position(tt)), float(pr.speed(tt)),
                         float(pr.control(tt))),
                     Phase.CZ))
        segs.append((prof.tm, prof.tf,
                     lambda tt, pr=prof, off=offset: (
                         off + pr.L + pr.vm * (tt - pr.tm), pr.vm, 0.0),
                     Phase.MZ))
        if leg.intersection == 1 and config.intersections == 2:
            start = prof.tf
            base = offset + params.L + params.S
            vcr = prof.vm
            end = record.legs[1].t0 if len(record.legs) > 1 else start
            segs.append((start, end,
                         lambda tt, b=base, vv=vcr, s0=start: (
                             b + vv * (tt - s0), vv, 0.0),
                         Phase.POST_MZ))
            offset += params.L + params.S + config.corridor_gap
    return segs


def _log_rows(config: ScenarioConfig, records: dict[int, VehicleRecord],
              safety: list[SafetyRecord]):
    dt = config.dt
    end_time = max(rec.end_time for rec in records.values())
    n_steps = int(math.floor(end_time / dt + 1e-9))
    seg_map = {vid: _vehicle_segments(config, rec)
               for vid, rec in records.items()}
    trajectory_rows: list[tuple] = []
    ids = sorted(records)
    for k in range(n_steps + 1):
        t = k * dt
        for vid in ids:
            rec = records[vid]
            if t < rec.t_F - 1e-9 or t > rec.end_time + 1e-9:
                continue
            p, v, u, phase = _state_at(seg_map[vid], t)
            trajectory_rows.append((t, vid, p, v, u, phase.value))
    gap_rows: list[tuple] = []
    profile_of = {}
    for rec in records.values():
        for leg in rec.legs:
            profile_of[(leg.intersection, rec.id)] = leg.profile
    for srec in safety:
        follower = profile_of[(srec.intersection, srec.follower_id)]
        leader = profile_of[(srec.intersection, srec.leader_id)]
        k_lo = int(math.ceil(srec.t_lo / dt - 1e-9))
        k_hi = int(math.floor(srec.t_hi / dt + 1e-9))
        for k in range(k_lo, k_hi + 1):
            t = k * dt
            s = float(leader.position(t)) - float(follower.position(t))
            gap_rows.append((t, srec.follower_id, srec.leader_id, s))
    return trajectory_rows, gap_rows, end_time


def _state_at(segs, t):
    for t_lo, t_hi, fn, phase in segs:
        if t_lo - 1e-9 <= t <= t_hi + 1e-9:
            if t < t_lo:
                t = t_lo
            elif t > t_hi:
                t = t_hi
            p, v, u = fn(t)
            return p, v, u, phase
    # past the final segment: hold the exit state
    t_lo, t_hi, fn, phase = segs[-1]
    p, v, u = fn(t_hi)
    return p, v, u, phase


def safety_report(log: SimLog) -> SafetySummary:
    """Per-vehicle minimum gaps, total violation count, and a histogram of
    the minima (20 bins over [0, 4*delta])."""
    delta = log.config.params.delta
    mins: dict[int, float] = {}
    count = 0
    for rec in log.safety:
        count += len(rec.intervals)
        cur = mins.get(rec.follower_id)
        if cur is None or rec.s_min < cur:
            mins[rec.follower_id] = rec.s_min
    values = np.array(sorted(mins.values())) if mins else np.empty(0)
    counts, edges = np.histogram(np.clip(values, 0.0, 4.0 * delta),
                                 bins=20, range=(0.0, 4.0 * delta))
    return SafetySummary(per_vehicle_min_gap=mins, violation_count=count,
                         histogram_counts=counts, histogram_edges=edges)
