"""Decentralized coordination of automated vehicles through signal-free
intersections: energy-optimal crossing profiles, first-in-first-out exit
scheduling, rear-end feasibility analysis of entry states, and an upstream
enforcement zone that steers every arrival into its feasible entry set.

The compiled batch kernel is used when available; set CAV_CORRIDOR_PURE_PY
to force the pure-Python fallback (see cav_corridor.kernels.BACKEND).
"""

from __future__ import annotations

__version__ = "0.1.0"

from .coordinator import Coordinator, arrival_order, relation_label
from .errors import (ConfigError, CorridorError, DegenerateHorizonError,
                     DuplicateVehicleError, EmptyOverlapError,
                     FezGuaranteeError, InformationUnavailableError,
                     InvalidManeuverError, OutOfDomainError, ParameterError,
                     ScheduleInfeasibleError)
from .feasibility import (FeasibilityContext, FeasibilityRaster,
                          FeasibilityVerdict, GapCase, GapMinimum, GapPhase,
                          GapPiece, feasibility_grid, gap_pieces, is_feasible,
                          min_gap, t_k_delta, violation_intervals)
from .fez import (FezContext, FezDesign, FezPlan, check_parameter_condition,
                  design, entry_distance, fez_length, max_traverse_time,
                  plan_fez_control)
from .optctrl import (ConstraintViolation, OptimalProfile, ViolationKind,
                      check_constraints, evaluate, solve_profile)
from .scheduler import (ScheduleAssignment, assign, exit_lower_bound,
                        spacing_for_label)
from .simulator import (ArrivalSpec, SafetyRecord, SafetySummary,
                        ScenarioConfig, SimLog, VehicleRecord, run,
                        safety_report)
from .types import (CaseTag, InformationSet, Lane, Phase, SubsetLabel,
                    SystemParams, Vehicle, lanes_conflict)

__all__ = [
    "__version__",
    "ArrivalSpec", "CaseTag", "ConfigError", "ConstraintViolation",
    "Coordinator", "CorridorError", "DegenerateHorizonError",
    "DuplicateVehicleError", "EmptyOverlapError", "FeasibilityContext",
    "FeasibilityRaster", "FeasibilityVerdict", "FezContext", "FezDesign",
    "FezGuaranteeError", "FezPlan", "GapCase", "GapMinimum", "GapPhase",
    "GapPiece", "InformationSet", "InformationUnavailableError",
    "InvalidManeuverError", "Lane", "OptimalProfile", "OutOfDomainError",
    "ParameterError", "Phase", "SafetyRecord", "SafetySummary",
    "ScenarioConfig", "ScheduleAssignment", "ScheduleInfeasibleError",
    "SimLog", "SubsetLabel", "SystemParams", "Vehicle", "VehicleRecord",
    "ViolationKind", "arrival_order", "assign", "check_constraints",
    "check_parameter_condition", "design", "entry_distance", "evaluate",
    "exit_lower_bound", "feasibility_grid", "fez_length", "gap_pieces",
    "is_feasible", "lanes_conflict", "max_traverse_time", "min_gap",
    "plan_fez_control", "relation_label", "run", "safety_report",
    "solve_profile", "spacing_for_label", "t_k_delta",
    "violation_intervals",
]
