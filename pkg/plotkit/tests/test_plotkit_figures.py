"""Figure-builder tests against the golden CSV fixtures.

The fixtures were produced by the simulator CLI (see make_fixtures.sh):
a no-enforcement run whose gap curves dip under the floor, and a candidate
raster with both supported and NaN cells plus a boundary polyline.
"""

from __future__ import annotations

import hashlib
from pathlib import Path

import numpy as np
import pandas as pd
import pytest
from matplotlib.collections import QuadMesh

_plotkit = pytest.importorskip("plotkit",
                               reason="secondary package not installed")
build_figure = _plotkit.build_figure

FIXTURES = Path(__file__).parent / "fixtures"


def load(name: str) -> pd.DataFrame:
    return pd.read_csv(FIXTURES / name)


def constant_lines(ax):
    """Lines whose y-data is a single repeated value (reference lines)."""
    out = []
    for line in ax.lines:
        y = np.asarray(line.get_ydata(), dtype=float)
        if y.size and np.all(y == y[0]):
            out.append(float(y[0]))
    return out


def test_gaps_figure_draws_floor_line_and_violating_curve():
    fig = build_figure("gaps", [load("gaps.csv")], delta=10.0)
    ax = fig.axes[0]
    assert 10.0 in constant_lines(ax)
    data_minima = [float(np.min(line.get_ydata())) for line in ax.lines
                   if float(np.ptp(line.get_ydata())) > 0.0]
    assert min(data_minima) < 10.0


def test_gaps_floor_position_follows_delta():
    fig = build_figure("gaps", [load("gaps.csv")], delta=7.5)
    assert 7.5 in constant_lines(fig.axes[0])


def test_trajectories_one_curve_per_vehicle():
    frame = load("trajectories.csv")
    fig = build_figure("trajectories", [frame])
    ax = fig.axes[0]
    assert len(ax.lines) == frame["id"].nunique()


def test_trajectories_sign_convention_with_events():
    frame = load("trajectories.csv")
    events = load("events.csv")
    fig = build_figure("trajectories", [frame], events=events)
    ax = fig.axes[0]
    by_label = {line.get_label(): line for line in ax.lines
                if line.get_label().startswith("#")}
    for _, row in events.iterrows():
        y = np.asarray(by_label[f"#{int(row['id'])}"].get_ydata())
        if row["lane"] in ("NB", "SB"):
            assert float(np.min(y)) < -100.0
            assert float(np.max(y)) <= 50.0
        else:
            assert float(np.max(y)) > 100.0


def test_heatmap_has_mesh_and_boundary_overlay():
    fig = build_figure("feasibility-heatmap", [load("raster.csv")],
                       boundary=load("boundary.csv"))
    ax = fig.axes[0]
    meshes = [c for c in ax.collections if isinstance(c, QuadMesh)]
    assert meshes
    assert any(line.get_color() in ("black", "k") for line in ax.lines)


def test_heatmap_masks_nan_cells():
    frame = load("raster.csv")
    assert frame["s_star"].isna().any()
    fig = build_figure("feasibility-heatmap", [frame])
    mesh = [c for c in fig.axes[0].collections
            if isinstance(c, QuadMesh)][0]
    assert bool(np.ma.is_masked(mesh.get_array()))


def test_rendering_leaves_inputs_unmodified(tmp_path):
    names = ["trajectories.csv", "gaps.csv", "raster.csv",
             "boundary.csv", "events.csv"]
    before = {n: hashlib.sha256((FIXTURES / n).read_bytes()).hexdigest()
              for n in names}
    build_figure("trajectories", [load("trajectories.csv")],
                 events=load("events.csv")).savefig(tmp_path / "t.png")
    build_figure("gaps", [load("gaps.csv")]).savefig(tmp_path / "g.png")
    build_figure("feasibility-heatmap", [load("raster.csv")],
                 boundary=load("boundary.csv")).savefig(tmp_path / "h.png")
    after = {n: hashlib.sha256((FIXTURES / n).read_bytes()).hexdigest()
             for n in names}
    assert before == after


def test_unknown_kind_rejected():
    with pytest.raises(ValueError, match="unknown figure kind"):
        build_figure("pie-chart", [load("gaps.csv")])


def test_heatmap_rejects_multiple_inputs():
    frame = load("raster.csv")
    with pytest.raises(ValueError, match="exactly one input"):
        build_figure("feasibility-heatmap", [frame, frame])
