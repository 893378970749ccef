"""Shared value types: geometry/bound parameters, lanes, phases, vehicles.

Positions are measured along a vehicle's own lane. Inside one intersection,
``p = 0`` at the control-zone (CZ) entry, ``p = L`` at the merging-zone (MZ)
entry and ``p = L + S`` at the MZ exit. The enforcement zone (FEZ) occupies
``p in [-fez_length, 0]``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

from .errors import ParameterError


class Lane(Enum):
    """The four approach lanes, one per direction (straight-through routes only)."""

    EB = "EB"  # eastbound
    WB = "WB"  # westbound
    NB = "NB"  # northbound
    SB = "SB"  # southbound

    @property
    def road(self) -> str:
        """'EW' for the east-west road, 'NS' for the north-south road."""
        return "EW" if self in (Lane.EB, Lane.WB) else "NS"


class SubsetLabel(Enum):
    """Relationship of the queue predecessor i-1 to vehicle i.

    R: same road and direction, different lane (never occurs with one lane
       per direction).
    L: same lane (rear-end coupling).
    C: different roads, laterally conflicting inside the MZ.
    O: same road, opposite direction, no conflict.
    """

    R = "R"
    L = "L"
    C = "C"
    O = "O"


class CaseTag(Enum):
    """Which branch of the recursive exit-time rule produced an assignment."""

    FIRST = "FIRST"
    RO = "RO"
    L = "L"
    C = "C"


class Phase(Enum):
    """Zone a vehicle currently occupies."""

    FEZ = "FEZ"
    CZ = "CZ"
    MZ = "MZ"
    POST_MZ = "POST_MZ"
    EXITED = "EXITED"


@dataclass(frozen=True)
class SystemParams:
    """Corridor geometry and admissible-control bounds.

    Attributes
    ----------
    L : float
        Control-zone length, CZ entry to MZ entry (m).
    S : float
        Merging-zone side length (m).
    D : float
        Spacing between the two intersection centers (m).
    delta : float
        Minimal safe rear-end distance (m).
    v_min, v_max : float
        Admissible speed band (m/s).
    u_min, u_max : float
        Admissible control band (m/s^2).
    u_B : float
        Deceleration bound used for enforcement-zone sizing; must satisfy
        ``u_min < u_B < 0``.
    K : float
        Effort-cost weight in the 0.5*K*integral(u^2) objective.
    fez_length : float
        Enforcement-zone length (m). Defaults to the guaranteed sizing
        ``(v_min^2 - v_max^2) / (2 u_B)``.
    """

    L: float = 400.0
    S: float = 30.0
    D: float = 500.0
    delta: float = 10.0
    v_min: float = 7.0
    v_max: float = 15.0
    u_min: float = -5.0
    u_max: float = 3.0
    u_B: float = -2.0
    K: float = 1.0
    fez_length: float = None  # type: ignore[assignment]

    def __post_init__(self):
        if self.fez_length is None:
            if self.u_B < 0:
                object.__setattr__(
                    self, "fez_length",
                    (self.v_min**2 - self.v_max**2) / (2.0 * self.u_B))
            else:
                raise ParameterError("u_B must be negative (u_min < u_B < 0)")
        self.validate()

    def validate(self) -> None:
        """Raise ParameterError naming the first violated invariant."""
        checks = [
            (0 < self.v_min < self.v_max, "0 < v_min < v_max"),
            (self.u_min < self.u_B < 0 < self.u_max, "u_min < u_B < 0 < u_max"),
            (0 < self.S < self.L, "0 < S < L"),
            (self.delta > 0, "delta > 0"),
            (self.K > 0, "K > 0"),
            (self.fez_length > 0, "fez_length > 0"),
            (self.D > 0, "D > 0"),
        ]
        for ok, name in checks:
            if not ok:
                raise ParameterError(f"invariant violated: {name}")


@dataclass
class Vehicle:
    """Mutable per-vehicle record tracked by a coordinator.

    ``t_F``/``t0``/``tm``/``tf`` are the FEZ entry, CZ entry, MZ entry and MZ
    exit times; unset stages are None. ``p``, ``v``, ``u`` mirror the most
    recently observed kinematic state (CZ-relative position).
    """

    id: int
    intersection: int
    lane: Lane
    route: Lane = None  # type: ignore[assignment]
    phase: Phase = Phase.FEZ
    t_F: float | None = None
    t0: float | None = None
    tm: float | None = None
    tf: float | None = None
    p: float = 0.0
    v: float = 0.0
    u: float = 0.0

    def __post_init__(self):
        if self.route is None:
            self.route = self.lane  # straight-through
        if self.id <= 0:
            raise ParameterError("vehicle id must be a positive integer")
        if self.intersection not in (1, 2):
            raise ParameterError("intersection must be 1 or 2")


@dataclass(frozen=True)
class InformationSet:
    """Data available to a vehicle inside its CZ.

    ``s`` is the distance to the physically-ahead vehicle ``k_id`` on the
    same lane (None when leading the lane); predecessor terminal data refer
    to the queue predecessor i-1, which may differ from ``k_id``.
    """

    p: float
    v: float
    subset_label: SubsetLabel | None
    s: float | None
    k_id: int | None
    tm: float | None
    pred_tf: float | None
    pred_vf: float | None


# Lanes whose straight-through paths cross inside the merging zone.
def lanes_conflict(a: Lane, b: Lane) -> bool:
    """True when straight-through movements from lanes a and b can collide laterally."""
    return a.road != b.road
