"""Publication figures from batchbo benchmark CSV outputs."""

from .io import AggregateSeries, discover_aggregates, read_aggregate, read_timing
from .render import (
    PlotSpec,
    figure_convergence,
    figure_timing,
    plot_convergence,
    plot_timing,
    timing_bars,
)

__version__ = "0.1.0"
