"""Figure scripts for the intersection-simulator CSV exports.

This package consumes the simulator's documented CSV files (trajectories,
gaps, feasibility raster and boundary, events) and renders them to static
images. It never imports the simulator itself; the CSV headers are the
whole interface.
"""

from .figures import (build_figure, gaps_figure, heatmap_figure,
                      trajectories_figure)

__version__ = "0.1.0"

__all__ = ["build_figure", "gaps_figure", "heatmap_figure",
           "trajectories_figure", "__version__"]
