"""Exception hierarchy for the corridor library."""


class CorridorError(Exception):
    """Base class for all library-specific errors."""


class ParameterError(CorridorError, ValueError):
    """System parameters violate a documented invariant."""


class DuplicateVehicleError(CorridorError):
    """A vehicle id was registered twice at the same intersection."""


class InformationUnavailableError(CorridorError):
    """Information-set query for a vehicle that is not inside the control zone."""


class DegenerateHorizonError(CorridorError):
    """Boundary-value horizon too short to solve (tm - t0 below resolution)."""


class ScheduleInfeasibleError(CorridorError):
    """The recursive crossing-time rule produced a speed outside the admissible band."""


class OutOfDomainError(CorridorError, ValueError):
    """Trajectory evaluated outside its [t0, tf] domain."""


class EmptyOverlapError(CorridorError):
    """Leader and follower trajectories share no time overlap."""


class InvalidManeuverError(CorridorError, ValueError):
    """Constant-control maneuver with inconsistent speed-change/control signs."""


class FezGuaranteeError(CorridorError):
    """Enforcement-zone planning requested while the parameter condition fails."""


class ConfigError(CorridorError, ValueError):
    """Malformed or invariant-violating scenario configuration."""
