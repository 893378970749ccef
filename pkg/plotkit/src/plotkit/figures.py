"""Figure builders for the simulator CSV tables.

Each builder takes pandas DataFrames already validated against the
documented headers and returns a matplotlib Figure. The builders use the
object-oriented matplotlib API only (no pyplot, no global state), so they
are safe in headless scripts and parallel test runs alike.
"""

from __future__ import annotations

import matplotlib as mpl
import numpy as np
import pandas as pd
from matplotlib.figure import Figure

NS_LANES = {"NB", "SB"}
MAX_LEGEND_ENTRIES = 12


def _new_axes(title: str | None, xlabel: str, ylabel: str):
    fig = Figure(figsize=(9.0, 5.5), layout="constrained")
    ax = fig.subplots()
    if title:
        ax.set_title(title)
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    ax.grid(True, alpha=0.3)
    return fig, ax


def _compact_legend(ax) -> None:
    handles, labels = ax.get_legend_handles_labels()
    if 0 < len(labels) <= MAX_LEGEND_ENTRIES:
        ax.legend(loc="best", fontsize=8)


def trajectories_figure(frames: list[pd.DataFrame],
                        events: pd.DataFrame | None = None,
                        title: str | None = None) -> Figure:
    """Position-vs-time curves, one per vehicle id.

    With an events table, vehicles on the north-south road are drawn with
    negated position so the two roads separate visually: east-west traffic
    above the axis, north-south below.
    """
    fig, ax = _new_axes(title, "time [s]", "position along route [m]")
    signs: dict[int, float] = {}
    if events is not None:
        for _, row in events.iterrows():
            signs[int(row["id"])] = -1.0 if row["lane"] in NS_LANES else 1.0
    for frame in frames:
        for vid, group in frame.groupby("id", sort=True):
            sign = signs.get(int(vid), 1.0)
            ax.plot(group["t"], sign * group["p"], lw=1.0,
                    label=f"#{int(vid)}")
    if signs:
        ax.axhline(0.0, color="black", lw=0.8)
    _compact_legend(ax)
    return fig


def gaps_figure(frames: list[pd.DataFrame], delta: float = 10.0,
                title: str | None = None) -> Figure:
    """Gap-vs-time curves per follower/leader pair, with the gap floor."""
    fig, ax = _new_axes(title, "time [s]", "gap to vehicle ahead [m]")
    for frame in frames:
        for (fid, lid), group in frame.groupby(
                ["follower_id", "leader_id"], sort=True):
            ax.plot(group["t"], group["s"], lw=1.0,
                    label=f"#{int(fid)} behind #{int(lid)}")
    ax.axhline(delta, color="crimson", ls="--", lw=1.2,
               label=f"floor = {delta:g} m")
    _compact_legend(ax)
    return fig


def heatmap_figure(frame: pd.DataFrame,
                   boundary: pd.DataFrame | None = None,
                   title: str | None = None) -> Figure:
    """Minimum-gap raster over candidate entries, with the safe/unsafe
    boundary polyline overlaid in black when provided.

    Raster cells exported as NaN (no trajectory, or one outside the
    supported bounds) render in gray.
    """
    fig, ax = _new_axes(title, "entry time tau [s]", "entry speed [m/s]")
    ax.grid(False)
    grid = frame.pivot(index="upsilon", columns="tau", values="s_star")
    cmap = mpl.colormaps["viridis"].with_extremes(bad="0.85")
    mesh = ax.pcolormesh(grid.columns.to_numpy(), grid.index.to_numpy(),
                         np.ma.masked_invalid(grid.to_numpy()),
                         shading="nearest", cmap=cmap)
    fig.colorbar(mesh, ax=ax, label="minimum gap [m]")
    if boundary is not None and not boundary.empty:
        for seg, group in boundary.groupby("segment", sort=True):
            ax.plot(group["tau"], group["upsilon"], color="black", lw=2.0,
                    label="boundary" if seg == boundary["segment"].min()
                    else None)
        ax.legend(loc="upper right", fontsize=8)
    return fig


def build_figure(kind: str, frames: list[pd.DataFrame], *,
                 delta: float = 10.0,
                 boundary: pd.DataFrame | None = None,
                 events: pd.DataFrame | None = None,
                 title: str | None = None) -> Figure:
    """Dispatch to the builder for ``kind``; see the individual builders."""
    if kind == "trajectories":
        return trajectories_figure(frames, events=events, title=title)
    if kind == "gaps":
        return gaps_figure(frames, delta=delta, title=title)
    if kind == "feasibility-heatmap":
        if len(frames) != 1:
            raise ValueError("feasibility-heatmap takes exactly one input")
        return heatmap_figure(frames[0], boundary=boundary, title=title)
    raise ValueError(f"unknown figure kind: {kind}")
