"""Shared fixtures and numeric oracles for the test suite.

The oracles here deliberately avoid the closed forms used by the library:
they integrate or scan densely so that agreement is evidence, not tautology.
"""

from __future__ import annotations

import numpy as np
import pytest

from cav_corridor import SystemParams


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """Echo one line per acceptance criterion after the normal report."""
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def params() -> SystemParams:
    """Reference parameter set used throughout the suite."""
    return SystemParams()


def numeric_traverse_time(v0: float, distance: float, u: float, v_cap: float,
                          n: int = 200_001) -> float:
    """Time to cover ``distance`` starting at speed v0 under constant control
    u, saturating at v_cap and cruising afterwards.

    Integrates dt = dp / v(p) with v(p) = sqrt(v0^2 + 2 u p) on a dense grid,
    splitting at the saturation point. Independent of any closed form in the
    package.
    """
    if u == 0.0:
        return distance / v0
    p_sat = (v_cap * v_cap - v0 * v0) / (2.0 * u)
    p_ramp = min(distance, p_sat) if p_sat > 0 else distance
    p = np.linspace(0.0, p_ramp, n)
    v = np.sqrt(np.maximum(v0 * v0 + 2.0 * u * p, 1e-12))
    t = np.trapezoid(1.0 / v, p)
    if distance > p_ramp:
        t += (distance - p_ramp) / v_cap
    return float(t)


def dense_gap_minimum(pieces, dt: float = 1e-3) -> tuple[float, float]:
    """Brute-force minimum of a piecewise cubic gap: scan every piece on a
    grid of step <= dt (endpoints included) and return (value, time)."""
    best_s, best_t = np.inf, np.nan
    for piece in pieces:
        span = piece.t_hi - piece.t_lo
        n = max(2, int(np.ceil(span / dt)) + 1)
        ts = np.linspace(piece.t_lo, piece.t_hi, n)
        vals = piece.value(ts)
        k = int(np.argmin(vals))
        if vals[k] < best_s:
            best_s, best_t = float(vals[k]), float(ts[k])
    return best_s, best_t


def quadrature_cost(profile, k_weight: float = 1.0, n: int = 100_001) -> float:
    """Control effort 0.5 * K * integral(u^2) over [t0, tm] by trapezoid."""
    ts = np.linspace(profile.t0, profile.tm, n)
    u = profile.control(ts)
    return 0.5 * k_weight * float(np.trapezoid(u * u, ts))
