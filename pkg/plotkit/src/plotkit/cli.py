"""Command line: render simulator CSV exports to image files.

Exit codes: 0 on success, 1 on unreadable input or schema mismatch (the
message names the offending file and columns), 2 on bad usage.
"""

from __future__ import annotations

import argparse
import sys

import pandas as pd

from .figures import build_figure

REQUIRED_COLUMNS = {
    "trajectories": ("t", "id", "p", "v", "u", "phase"),
    "gaps": ("t", "follower_id", "leader_id", "s"),
    "feasibility-heatmap": ("tau", "upsilon", "s_star", "feasible"),
}
BOUNDARY_COLUMNS = ("segment", "tau", "upsilon")
EVENTS_COLUMNS = ("id", "lane")


class InputError(Exception):
    """Unreadable input file or a table not matching the documented header."""


def load_table(path: str, required: tuple[str, ...],
               allow_empty: bool = False) -> pd.DataFrame:
    try:
        frame = pd.read_csv(path)
    except OSError:
        raise InputError(f"{path}: cannot read input") from None
    except pd.errors.EmptyDataError:
        raise InputError(f"{path}: empty file, expected a CSV header") from None
    missing = [col for col in required if col not in frame.columns]
    if missing:
        raise InputError(f"{path}: missing column(s): {', '.join(missing)}")
    if frame.empty and not allow_empty:
        raise InputError(f"{path}: no data rows")
    return frame


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="plotkit",
        description="Render simulator CSV exports to static images.")
    parser.add_argument("--kind", required=True,
                        choices=sorted(REQUIRED_COLUMNS),
                        help="which figure to draw")
    parser.add_argument("--in", dest="inputs", action="append", required=True,
                        metavar="CSV",
                        help="input table; repeat to overlay several runs")
    parser.add_argument("--out", required=True, metavar="IMAGE",
                        help="output image path, format from the extension")
    parser.add_argument("--delta", type=float, default=10.0,
                        help="gap floor drawn on gaps figures [m]")
    parser.add_argument("--boundary", metavar="CSV",
                        help="boundary polyline overlaid on the heatmap")
    parser.add_argument("--events", metavar="CSV",
                        help="per-vehicle lanes; draws north-south traffic "
                             "with negated position")
    parser.add_argument("--title", default=None)
    parser.add_argument("--dpi", type=int, default=150)
    args = parser.parse_args(argv)

    try:
        frames = [load_table(path, REQUIRED_COLUMNS[args.kind])
                  for path in args.inputs]
        boundary = (load_table(args.boundary, BOUNDARY_COLUMNS,
                               allow_empty=True)
                    if args.boundary else None)
        events = (load_table(args.events, EVENTS_COLUMNS, allow_empty=True)
                  if args.events else None)
        fig = build_figure(args.kind, frames, delta=args.delta,
                           boundary=boundary, events=events, title=args.title)
    except (InputError, ValueError) as exc:
        print(f"plotkit: {exc}", file=sys.stderr)
        return 1
    fig.savefig(args.out, dpi=args.dpi)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
