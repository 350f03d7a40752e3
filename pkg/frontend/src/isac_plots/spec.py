"""Figure request description and the pipeline's error types."""

from __future__ import annotations

import enum
from dataclasses import dataclass
from pathlib import Path


class PlotError(Exception):
    """Base class for everything this pipeline raises on purpose."""


class SchemaError(PlotError):
    """The CSV does not carry the columns the figure kind requires."""


class EmptyDataError(PlotError):
    """The CSV has a header but no usable rows."""


class FigureKind(enum.Enum):
    REGION = "region"
    WATERFILL = "waterfill"
    SWEEP = "sweep"
    COMPOUND = "compound"
    BA_DISTRIBUTIONS = "ba-distributions"


class AxisUnits(enum.Enum):
    NATS = "nats"
    BITS = "bits"


@dataclass(frozen=True)
class FigureSpec:
    """One figure: which CSV, which layout, where to write the vector file."""

    input_csv: Path
    figure_kind: FigureKind
    output_path: Path
    axis_units: AxisUnits = AxisUnits.NATS

    def __post_init__(self) -> None:
        object.__setattr__(self, "input_csv", Path(self.input_csv))
        object.__setattr__(self, "output_path", Path(self.output_path))
