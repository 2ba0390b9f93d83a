"""Figure rendering for experiment trace CSVs (regret curves and tracking)."""

from ilc_plots.figures import (
    DPI,
    FIGSIZE,
    KINDS,
    MissingColumnError,
    PlotError,
    PlotSpec,
    build_figure,
    load_columns,
    render,
    sample_path,
)

__version__ = "0.1.0"

__all__ = [
    "DPI",
    "FIGSIZE",
    "KINDS",
    "MissingColumnError",
    "PlotError",
    "PlotSpec",
    "build_figure",
    "load_columns",
    "render",
    "sample_path",
]
