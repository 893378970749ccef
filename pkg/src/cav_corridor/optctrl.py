"""Minimum-effort control profiles through the control zone.

Minimizing 0.5*K*integral(u^2) between fixed boundary states gives an affine
control u(t) = a*t + b; speed and position follow by integration:

    v(t) = 0.5*a*t^2 + b*t + c
    p(t) = (1/6)*a*t^3 + 0.5*b*t^2 + c*t + d

The four coefficients are pinned by p(t0) = 0, v(t0) = v0, p(tm) = L,
v(tm) = vm. Inside the MZ the vehicle holds vm, so tf = tm + S/vm and
p(t) = L + vm*(t - tm) there. Speed/control bound crossings are detected
analytically and reported, never resolved.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import DegenerateHorizonError, OutOfDomainError
from .types import SystemParams

_T_TOL = 1e-9


@dataclass(frozen=True)
class OptimalProfile:
    """Immutable trajectory: cubic position on [t0, tm], cruise on [tm, tf]."""

    a: float
    b: float
    c: float
    d: float
    t0: float
    tm: float
    tf: float
    vm: float
    L: float
    S: float

    @property
    def v0(self) -> float:
        return self.speed(self.t0)

    def position(self, t):
        """Position at t; cubic below tm, cruise line above. No domain check."""
        t = np.asarray(t, dtype=float)
        cubic = ((self.a / 6.0 * t + 0.5 * self.b) * t + self.c) * t + self.d
        cruise = self.L + self.vm * (t - self.tm)
        return np.where(t <= self.tm, cubic, cruise)[()]

    def speed(self, t):
        t = np.asarray(t, dtype=float)
        quad = (0.5 * self.a * t + self.b) * t + self.c
        return np.where(t <= self.tm, quad, self.vm)[()]

    def control(self, t):
        t = np.asarray(t, dtype=float)
        return np.where(t <= self.tm, self.a * t + self.b, 0.0)[()]


def solve_profile(t0: float, v0: float, tm: float, vm: float,
                  L: float, S: float) -> OptimalProfile:
    """Coefficients of the minimum-effort run from (t0, 0, v0) to (tm, L, vm).

    The linear system is solved in the shifted variable (t - t0) where it is
    triangular and well conditioned, then converted to absolute-time
    coefficients. S only sets the cruise segment, tf = tm + S/vm.
    """
    T = tm - t0
    if T < _T_TOL:
        raise DegenerateHorizonError(
            f"horizon tm - t0 = {T:.3g} s below {_T_TOL:g} s")
    if vm <= 0.0:
        raise ValueError("terminal speed vm must be positive")
    a = (6.0 * (v0 + vm) * T - 12.0 * L) / (T * T * T)
    b_shift = (vm - v0 - 0.5 * a * T * T) / T
    b = b_shift - a * t0
    c = v0 - (b + 0.5 * a * t0) * t0
    d = -((a / 6.0 * t0 + 0.5 * b) * t0 + c) * t0
    return OptimalProfile(a=a, b=b, c=c, d=d, t0=t0, tm=tm,
                          tf=tm + S / vm, vm=vm, L=L, S=S)


def evaluate(profile: OptimalProfile, t: float) -> tuple[float, float, float]:
    """(position, speed, control) at time t within [t0, tf]."""
    if t < profile.t0 - _T_TOL or t > profile.tf + _T_TOL:
        raise OutOfDomainError(
            f"t = {t:.6g} outside [{profile.t0:.6g}, {profile.tf:.6g}]")
    if t <= profile.tm:
        return (float(profile.position(t)), float(profile.speed(t)),
                float(profile.control(t)))
    return profile.L + profile.vm * (t - profile.tm), profile.vm, 0.0


class ViolationKind(Enum):
    V_MIN = "V_MIN"
    V_MAX = "V_MAX"
    U_MIN = "U_MIN"
    U_MAX = "U_MAX"


@dataclass(frozen=True)
class ConstraintViolation:
    kind: ViolationKind
    t_lo: float
    t_hi: float


def _exceed_intervals(coeffs: list[float], lo: float, hi: float,
                      threshold: float, above: bool) -> list[tuple[float, float]]:
    """Maximal subintervals of [lo, hi] where the polynomial (descending
    coefficients) is strictly beyond the threshold, found from its real roots."""
    shifted = list(coeffs)
    shifted[-1] -= threshold
    # strip numerically-zero leading coefficients
    while len(shifted) > 1 and abs(shifted[0]) < 1e-15:
        shifted = shifted[1:]
    breaks = [lo, hi]
    if len(shifted) > 1:
        for r in np.roots(shifted):
            if abs(r.imag) < 1e-9 and lo < r.real < hi:
                breaks.append(float(r.real))
    breaks = sorted(set(breaks))
    out: list[tuple[float, float]] = []
    tol = 1e-9
    for a, b in zip(breaks[:-1], breaks[1:]):
        mid = 0.5 * (a + b)
        val = float(np.polyval(coeffs, mid))
        beyond = val > threshold + tol if above else val < threshold - tol
        if beyond:
            if out and abs(out[-1][1] - a) < 1e-12:
                out[-1] = (out[-1][0], b)
            else:
                out.append((a, b))
    return out


def check_constraints(profile: OptimalProfile,
                      params: SystemParams) -> list[ConstraintViolation]:
    """Intervals of [t0, tm] where speed or control leaves its admissible band.

    An empty list means the unconstrained solution is admissible as-is.
    Boundary-touching values (e.g. vm equal to v_max) are not violations.
    """
    lo, hi = profile.t0, profile.tm
    v_poly = [0.5 * profile.a, profile.b, profile.c]
    u_poly = [profile.a, profile.b]
    found: list[ConstraintViolation] = []
    for kind, poly, threshold, above in (
            (ViolationKind.V_MAX, v_poly, params.v_max, True),
            (ViolationKind.V_MIN, v_poly, params.v_min, False),
            (ViolationKind.U_MAX, u_poly, params.u_max, True),
            (ViolationKind.U_MIN, u_poly, params.u_min, False)):
        for a, b in _exceed_intervals(poly, lo, hi, threshold, above):
            found.append(ConstraintViolation(kind=kind, t_lo=a, t_hi=b))
    found.sort(key=lambda rec: (rec.t_lo, rec.kind.value))
    return found


def to_json(profile: OptimalProfile) -> str:
    """Serialize the fields needed to replay the trajectory."""
    return json.dumps({"a": profile.a, "b": profile.b, "c": profile.c,
                       "d": profile.d, "t0": profile.t0, "tm": profile.tm,
                       "tf": profile.tf, "vm": profile.vm})


def from_json(text: str) -> OptimalProfile:
    """Rebuild a profile; L and S are recovered from the serialized fields."""
    raw = json.loads(text)
    a, b, c, d = raw["a"], raw["b"], raw["c"], raw["d"]
    tm = raw["tm"]
    L = ((a / 6.0 * tm + 0.5 * b) * tm + c) * tm + d
    S = raw["vm"] * (raw["tf"] - tm)
    return OptimalProfile(a=a, b=b, c=c, d=d, t0=raw["t0"], tm=tm,
                          tf=raw["tf"], vm=raw["vm"], L=L, S=S)
