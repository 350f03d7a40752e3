"""Static figure pipeline for ``isac-limits`` CSV datasets.

Reads the batch CLI's CSV files and regenerates publication-style vector
figures — region curves, water-filling bar charts, sweep panels,
pilot-then-data comparisons, and scalar input/output distributions. Never
computes any domain quantity: every plotted number is a CSV cell.
"""

__version__ = "0.1.0"

from .render import render
from .spec import (AxisUnits, EmptyDataError, FigureKind, FigureSpec,
                   PlotError, SchemaError)

__all__ = [
    "__version__", "AxisUnits", "EmptyDataError", "FigureKind", "FigureSpec",
    "PlotError", "SchemaError", "render",
]
