"""Stable-format CSV/JSON export.

All numeric fields are serialized with 9 significant digits, booleans as
1/0, and missing values as empty cells, so identical runs produce byte-
identical files. Writes go through a temp file in the target directory
followed by an atomic rename.
"""

from __future__ import annotations

import json
import math
import os
import tempfile
from typing import Any, Iterable, Sequence

import numpy as np


def fmt(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        v = float(value)
        if math.isnan(v):
            return "nan"
        return format(v, ".9g")
    return str(value)


def atomic_write_text(path: str, text: str) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", text=True)
    try:
        with os.fdopen(fd, "w") as handle:
            handle.write(text)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise


def write_csv(path: str, header: Sequence[str],
              rows: Iterable[Sequence[Any]]) -> None:
    lines = [",".join(header)]
    lines.extend(",".join(fmt(cell) for cell in row) for row in rows)
    atomic_write_text(path, "\n".join(lines) + "\n")


def write_json(path: str, obj: Any) -> None:
    atomic_write_text(path, json.dumps(obj, indent=2, sort_keys=True) + "\n")


TRAJECTORIES_HEADER = ["t", "id", "p", "v", "u", "phase"]
EVENTS_HEADER = ["id", "lane", "subset_label", "case_tag", "t_F", "t0",
                 "tm", "tf", "vm", "violations", "intersection"]
GAPS_HEADER = ["t", "follower_id", "leader_id", "s"]
SCHEDULE_HEADER = ["id", "case_tag", "t0", "tm", "tf", "vm", "bound_active",
                   "intersection"]
RASTER_HEADER = ["tau", "upsilon", "s_star", "feasible"]
BOUNDARY_HEADER = ["segment", "tau", "upsilon"]


def write_trajectories(path: str, log) -> None:
    write_csv(path, TRAJECTORIES_HEADER, log.trajectory_rows)


def write_events(path: str, log) -> None:
    rows = []
    for rec in log.records:
        for leg in rec.legs:
            rows.append((
                rec.id, rec.lane.value,
                None if leg.subset_label is None else leg.subset_label.value,
                leg.schedule.case_tag.value,
                rec.t_F if leg.intersection == 1 else None,
                leg.t0, leg.schedule.tm, leg.schedule.tf, leg.schedule.vm,
                leg.violations, leg.intersection))
    write_csv(path, EVENTS_HEADER, rows)


def write_gaps(path: str, log) -> None:
    write_csv(path, GAPS_HEADER, log.gap_rows)


def write_schedule(path: str, log) -> None:
    rows = [(rec.id, leg.schedule.case_tag.value, leg.t0, leg.schedule.tm,
             leg.schedule.tf, leg.schedule.vm, leg.schedule.bound_active,
             leg.intersection)
            for rec in log.records for leg in rec.legs]
    write_csv(path, SCHEDULE_HEADER, rows)


def build_run_manifest(log, version: str) -> dict:
    flagged = sorted(rec.id for rec in log.records
                     if any(leg.constraint_flags for leg in rec.legs))
    by_vehicle = {str(rec.id): rec.violations
                  for rec in log.records if rec.violations}
    return {
        "kind": "simulate",
        "config": log.config.to_dict(),
        "seed": log.config.seed,
        "version": version,
        "end_time": log.end_time,
        "violations": {
            "total": sum(rec.violations for rec in log.records),
            "vehicles": by_vehicle,
        },
        "constraint_flagged": flagged,
    }


def write_raster(path: str, raster) -> None:
    """Raster rows; cells whose solve was flagged (bound-constrained or
    degenerate) export a NaN gap minimum but keep their verdict column."""
    rows = []
    for i in range(raster.tau.size):
        for j in range(raster.upsilon.size):
            s_out = float(raster.s_star[i, j]) if raster.status[i, j] == 0 \
                else float("nan")
            rows.append((float(raster.tau[i]), float(raster.upsilon[j]),
                         s_out, bool(raster.feasible[i, j])))
    write_csv(path, RASTER_HEADER, rows)


def write_boundary(path: str, raster) -> None:
    rows = [(seg, float(tau), float(ups))
            for seg, poly in enumerate(raster.boundary)
            for tau, ups in poly]
    write_csv(path, BOUNDARY_HEADER, rows)
