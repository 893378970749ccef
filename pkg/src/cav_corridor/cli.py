"""Command-line front end: scenario runs, feasibility-map export, zone
design queries, and manifest replay.

Exit codes: 0 success, 1 malformed config (message is line-anchored into
the offending file), 2 gap violations occurred and --fail-on-violation was
given. Set CAV_CORRIDOR_LOG=DEBUG (or INFO, ...) for progress logging.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import re
import sys

from . import __version__
from .errors import ConfigError, CorridorError
from .feasibility import FeasibilityContext, feasibility_grid
from .fez import design
from .optctrl import solve_profile
from .output import (build_run_manifest, write_boundary, write_events,
                     write_gaps, write_json, write_raster, write_schedule,
                     write_trajectories)
from .simulator import ScenarioConfig, run, safety_report
from .types import SubsetLabel, SystemParams

log = logging.getLogger("cav_corridor.cli")


class _Fail(Exception):
    """Internal: carries an exit code and a user-facing message."""

    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code
        self.message = message


def _setup_logging() -> None:
    level_name = os.environ.get("CAV_CORRIDOR_LOG", "WARNING").upper()
    level = getattr(logging, level_name, logging.WARNING)
    logging.basicConfig(level=level,
                        format="%(levelname)s %(name)s: %(message)s")


def _load_json(path: str) -> tuple[dict, str]:
    try:
        with open(path, "r", encoding="utf-8") as handle:
            text = handle.read()
    except OSError as exc:
        raise _Fail(1, f"{path}: cannot read config ({exc.strerror})")
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise _Fail(1, f"{path}:{exc.lineno}: invalid JSON: {exc.msg}")
    if not isinstance(raw, dict):
        raise _Fail(1, f"{path}:1: config must be a JSON object")
    return raw, text


def _anchored(path: str, text: str, message: str) -> str:
    """Prefix the message with path:line, locating the first token of the
    message that appears as a quoted key in the config text."""
    lines = text.splitlines()
    for token in re.findall(r"[A-Za-z_][A-Za-z0-9_]*", message):
        for i, line in enumerate(lines, 1):
            if f'"{token}"' in line:
                return f"{path}:{i}: {message}"
    return f"{path}:1: {message}"


def _apply_overrides(raw: dict, sets: list[str]) -> None:
    for item in sets:
        key, sep, value = item.partition("=")
        if not sep or not key:
            raise _Fail(1, f"--set expects KEY=VALUE, got {item!r}")
        try:
            parsed = json.loads(value)
        except json.JSONDecodeError:
            parsed = value
        target = raw
        parts = key.split(".")
        for part in parts[:-1]:
            nxt = target.setdefault(part, {})
            if not isinstance(nxt, dict):
                raise _Fail(1, f"--set path {key!r} does not address an object")
            target = nxt
        target[parts[-1]] = parsed


def _run_scenario(raw: dict, text: str, path: str, args) -> int:
    if getattr(args, "seed", None) is not None:
        raw["seed"] = args.seed
    if getattr(args, "no_fez", False):
        raw["fez_enabled"] = False
    try:
        config = ScenarioConfig.from_dict(raw)
        sim_log = run(config)
    except CorridorError as exc:
        raise _Fail(1, _anchored(path, text, str(exc)))
    os.makedirs(args.out, exist_ok=True)
    write_trajectories(os.path.join(args.out, "trajectories.csv"), sim_log)
    write_events(os.path.join(args.out, "events.csv"), sim_log)
    write_gaps(os.path.join(args.out, "gaps.csv"), sim_log)
    write_schedule(os.path.join(args.out, "schedule.csv"), sim_log)
    write_json(os.path.join(args.out, "run_manifest.json"),
               build_run_manifest(sim_log, __version__))
    summary = safety_report(sim_log)
    print(f"simulated {len(sim_log.records)} vehicle(s); "
          f"{summary.violation_count} gap violation(s); "
          f"outputs in {args.out}")
    if args.fail_on_violation and summary.violation_count > 0:
        return 2
    return 0


def _cmd_simulate(args) -> int:
    raw, text = _load_json(args.config)
    _apply_overrides(raw, args.set)
    return _run_scenario(raw, text, args.config, args)


def _cmd_replay(args) -> int:
    raw, text = _load_json(args.config)
    if "config" not in raw:
        raise _Fail(1, f'{args.config}:1: manifest missing a "config" section')
    kind = raw.get("kind", "simulate")
    inner = raw["config"]
    if not isinstance(inner, dict):
        raise _Fail(1, f'{args.config}:1: manifest "config" must be an object')
    if kind == "feasibility-map":
        return _run_map(inner, text, args.config, args)
    return _run_scenario(inner, text, args.config, args)


_MAP_KEYS = {"params", "leader", "label", "tau_range", "upsilon_range", "grid"}


def _leader_profile(raw: dict, text: str, path: str, params: SystemParams):
    spec = raw.get("leader")
    if spec is None:
        raise _Fail(1, _anchored(path, text, "leader section is required"))
    if "constant_speed" in spec:
        bad = sorted(set(spec) - {"constant_speed", "t0"})
        if bad:
            raise _Fail(1, _anchored(
                path, text, f"unknown leader key(s): {', '.join(bad)}"))
        v = float(spec["constant_speed"])
        t0 = float(spec.get("t0", 0.0))
        return solve_profile(t0, v, t0 + params.L / v, v, params.L, params.S)
    bad = sorted(set(spec) - {"t0", "v0", "tm", "vm"})
    if bad:
        raise _Fail(1, _anchored(
            path, text, f"unknown leader key(s): {', '.join(bad)}"))
    missing = sorted({"t0", "v0", "tm", "vm"} - set(spec))
    if missing:
        raise _Fail(1, _anchored(
            path, text, f"leader section missing: {', '.join(missing)}"))
    return solve_profile(float(spec["t0"]), float(spec["v0"]),
                         float(spec["tm"]), float(spec["vm"]),
                         params.L, params.S)


def _run_map(raw: dict, text: str, path: str, args) -> int:
    unknown = sorted(set(raw) - _MAP_KEYS)
    if unknown:
        raise _Fail(1, _anchored(
            path, text, f"unknown config key(s): {', '.join(unknown)}"))
    try:
        params = SystemParams(**raw.get("params", {}))
        leader = _leader_profile(raw, text, path, params)
        label = SubsetLabel(raw.get("label", "L"))
        ctx = FeasibilityContext.behind_leader(leader, params, label)
        tau_range = tuple(raw.get("tau_range", (leader.t0, leader.tm)))
        ups_range = tuple(raw.get("upsilon_range",
                                  (params.v_min, params.v_max)))
        n_tau, n_ups = raw.get("grid", (200, 200))
        if getattr(args, "grid", None):
            m = re.fullmatch(r"(\d+)x(\d+)", args.grid)
            if not m:
                raise _Fail(1, "--grid expects NxM (for example 200x200)")
            n_tau, n_ups = int(m.group(1)), int(m.group(2))
        raster = feasibility_grid(ctx, tau_range, ups_range,
                                  int(n_tau), int(n_ups))
    except _Fail:
        raise
    except (CorridorError, ValueError, TypeError) as exc:
        raise _Fail(1, _anchored(path, text, str(exc)))
    os.makedirs(args.out, exist_ok=True)
    write_raster(os.path.join(args.out, "raster.csv"), raster)
    write_boundary(os.path.join(args.out, "boundary.csv"), raster)
    manifest = {
        "kind": "feasibility-map",
        "config": {
            "params": raw.get("params", {}),
            "leader": raw["leader"],
            "label": label.value,
            "tau_range": list(tau_range),
            "upsilon_range": list(ups_range),
            "grid": [int(n_tau), int(n_ups)],
        },
        "version": __version__,
        "cells": int(raster.s_star.size),
        "feasible_cells": int(raster.feasible.sum()),
        "unsupported_cells": int((raster.status == 1).sum()),
        "degenerate_cells": int((raster.status == 2).sum()),
        "boundary_segments": len(raster.boundary),
    }
    write_json(os.path.join(args.out, "run_manifest.json"), manifest)
    print(f"raster {int(n_tau)}x{int(n_ups)}: "
          f"{manifest['feasible_cells']}/{manifest['cells']} feasible cells; "
          f"outputs in {args.out}")
    return 0


def _cmd_feasibility_map(args) -> int:
    raw, text = _load_json(args.config)
    _apply_overrides(raw, args.set)
    return _run_map(raw, text, args.config, args)


def _cmd_fez_design(args) -> int:
    raw, text = _load_json(args.config)
    _apply_overrides(raw, args.set)
    unknown = sorted(set(raw) - {"params"})
    if unknown:
        raise _Fail(1, _anchored(
            path=args.config, text=text,
            message=f"unknown config key(s): {', '.join(unknown)}"))
    try:
        params = SystemParams(**raw.get("params", {}))
    except (CorridorError, TypeError) as exc:
        raise _Fail(1, _anchored(args.config, text, str(exc)))
    summary = design(params)
    margin = (params.v_min - params.v_max) / params.u_B \
        - params.delta / params.v_min
    print(f"enforcement zone length: {summary.f_bar} m")
    if summary.condition_ok:
        print(f"condition holds (margin {margin:.9g} s)")
    else:
        print(f"condition fails (margin {margin:.9g} s)")
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        write_json(os.path.join(args.out, "fez_design.json"), {
            "fez_length": summary.f_bar,
            "condition_ok": summary.condition_ok,
            "margin": margin,
            "params": raw.get("params", {}),
            "version": __version__,
        })
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cav-corridor",
        description="Signal-free intersection coordination simulator")
    parser.add_argument("--version", action="version",
                        version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(sp, needs_out=True):
        sp.add_argument("--config", required=True, metavar="PATH",
                        help="JSON scenario or manifest file")
        sp.add_argument("--set", action="append", default=[],
                        metavar="KEY=VALUE",
                        help="override a config entry (dotted paths reach "
                             "into sections, e.g. params.delta=12)")
        if needs_out:
            sp.add_argument("--out", required=True, metavar="DIR",
                            help="output directory (created if missing)")

    sim = sub.add_parser("simulate", help="run a scenario and export CSVs")
    common(sim)
    sim.add_argument("--seed", type=int, default=None,
                     help="override the config seed")
    sim.add_argument("--no-fez", action="store_true",
                     help="disable enforcement-zone planning")
    sim.add_argument("--fail-on-violation", action="store_true",
                     help="exit 2 if any gap violation occurs")
    sim.set_defaults(func=_cmd_simulate)

    fmap = sub.add_parser("feasibility-map",
                          help="export a gap-minimum raster and boundary")
    common(fmap)
    fmap.add_argument("--grid", default=None, metavar="NxM",
                      help="grid resolution (tau x upsilon), default 200x200")
    fmap.set_defaults(func=_cmd_feasibility_map)

    fz = sub.add_parser("fez-design",
                        help="print zone length and the sizing condition")
    common(fz, needs_out=False)
    fz.add_argument("--out", default=None, metavar="DIR",
                    help="also write fez_design.json here")
    fz.set_defaults(func=_cmd_fez_design)

    rep = sub.add_parser("replay",
                         help="re-run an exported manifest bit-identically")
    common(rep)
    rep.add_argument("--fail-on-violation", action="store_true",
                     help="exit 2 if any gap violation occurs")
    rep.add_argument("--grid", default=None, help=argparse.SUPPRESS)
    rep.set_defaults(func=_cmd_replay)
    return parser


def main(argv: list[str] | None = None) -> int:
    _setup_logging()
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except _Fail as exc:
        print(exc.message, file=sys.stderr)
        return exc.code


if __name__ == "__main__":
    sys.exit(main())
