"""CSV loading with fail-closed schema validation per figure kind.

Every number that ends up on an axis comes straight out of a CSV cell; this
module only checks presence and parses, it never derives new quantities.
"""

from __future__ import annotations

import csv
from pathlib import Path

from .spec import EmptyDataError, FigureKind, SchemaError

STANDARD = ("alpha", "provenance", "mmse", "mmse_stderr", "rate_nats",
            "rate_bits", "rate_stderr", "converged")

REQUIRED_COLUMNS = {
    FigureKind.REGION: STANDARD,
    FigureKind.SWEEP: STANDARD + ("sweep_param", "sweep_value"),
    FigureKind.WATERFILL: STANDARD + ("branch", "mode_index", "gain",
                                      "power", "water_level"),
    FigureKind.COMPOUND: STANDARD + ("strategy", "t_pilot",
                                     "rate_pilot_nats", "rate_data_nats",
                                     "rate_data_on_estimate_nats",
                                     "estimation_mse",
                                     "estimation_mse_stderr"),
    FigureKind.BA_DISTRIBUTIONS: ("alpha", "variable", "grid", "mass"),
}


def load_rows(path: Path, kind: FigureKind) -> list[dict]:
    """Read the CSV and verify it carries the kind's required columns."""
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.DictReader(fh)
            header = reader.fieldnames
            rows = list(reader)
    except FileNotFoundError:
        raise SchemaError(f"input CSV not found: {path}")
    if header is None:
        raise EmptyDataError(f"CSV has no header: {path}")
    missing = [c for c in REQUIRED_COLUMNS[kind] if c not in header]
    if missing:
        raise SchemaError(
            f"CSV {path} is missing column(s) required by "
            f"{kind.value!r} figures: {', '.join(missing)}")
    if not rows:
        raise EmptyDataError(f"CSV has no data rows: {path}")
    return rows


def cell_float(row: dict, column: str):
    """Parse one cell as a float, or None for an intentionally blank cell."""
    raw = row.get(column, "")
    if raw is None or raw == "":
        return None
    try:
        return float(raw)
    except ValueError:
        raise SchemaError(f"column {column!r} holds non-numeric value "
                          f"{raw!r}")
