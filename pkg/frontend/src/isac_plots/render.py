"""Render one figure kind from a validated CSV into a deterministic SVG.

Determinism contract: identical input bytes produce identical output bytes.
Matplotlib's two sources of nondeterminism — the embedded creation date and
the hashed element ids — are pinned by a metadata override and a fixed hash
salt. All orderings (curves, legend entries, panels) are fixed by explicit
sort keys, never by dict/set iteration over parsed floats.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("svg")

import matplotlib.pyplot as plt  # noqa: E402 - backend must be set first

from .schema import cell_float, load_rows  # noqa: E402
from .spec import (AxisUnits, EmptyDataError, FigureKind,  # noqa: E402
                   FigureSpec)

HASH_SALT = "isac-plots"

# Fixed curve order and styling for region-style figures.
PROVENANCE_STYLE = (
    ("limit", {"color": "#000000", "linestyle": "-", "marker": ""}),
    ("outer", {"color": "#1f77b4", "linestyle": "-", "marker": "o"}),
    ("sib", {"color": "#2ca02c", "linestyle": "--", "marker": "s"}),
    ("cib", {"color": "#d62728", "linestyle": "--", "marker": "^"}),
    ("time-share-ps-pc", {"color": "#7f7f7f", "linestyle": ":",
                          "marker": ""}),
    ("time-share-cib-sib", {"color": "#9467bd", "linestyle": "-.",
                            "marker": ""}),
    ("strategy", {"color": "#ff7f0e", "linestyle": "", "marker": "*"}),
)


def _rate_column(units: AxisUnits) -> str:
    return "rate_nats" if units is AxisUnits.NATS else "rate_bits"


def _rate_label(units: AxisUnits) -> str:
    return f"rate ({units.value}/symbol)"


def _region_points(rows, rate_col):
    """Group plottable (mmse, rate) pairs by provenance, sorted by mmse."""
    by_prov: dict[str, list[tuple[float, float]]] = {}
    for row in rows:
        mmse = cell_float(row, "mmse")
        rate = cell_float(row, rate_col)
        if mmse is None or rate is None:
            continue
        by_prov.setdefault(row["provenance"], []).append((mmse, rate))
    for pts in by_prov.values():
        pts.sort()
    return by_prov


def _draw_region_axes(ax, by_prov, units):
    drew = False
    for name, style in PROVENANCE_STYLE:
        pts = by_prov.get(name)
        if not pts:
            continue
        xs = [p[0] for p in pts]
        ys = [p[1] for p in pts]
        ax.plot(xs, ys, label=name, markersize=5, **style)
        drew = True
    if not drew:
        raise EmptyDataError("no plottable (mmse, rate) pairs in the CSV")
    ax.set_xlabel("modified MMSE")
    ax.set_ylabel(_rate_label(units))
    ax.legend(loc="best", fontsize=8)
    ax.grid(True, alpha=0.3)


def _render_region(rows, spec, fig):
    ax = fig.add_subplot(1, 1, 1)
    by_prov = _region_points(rows, _rate_column(spec.axis_units))
    _draw_region_axes(ax, by_prov, spec.axis_units)
    ax.set_title("MMSE-rate region")


def _render_sweep(rows, spec, fig):
    # One panel per sweep value, in file order.
    panels: list[tuple[str, str]] = []
    for row in rows:
        key = (row.get("sweep_param", ""), row.get("sweep_value", ""))
        if key not in panels:
            panels.append(key)
    rate_col = _rate_column(spec.axis_units)
    for i, (param, value) in enumerate(panels):
        ax = fig.add_subplot(1, len(panels), i + 1)
        subset = [r for r in rows
                  if (r.get("sweep_param", ""),
                      r.get("sweep_value", "")) == (param, value)]
        _draw_region_axes(ax, _region_points(subset, rate_col),
                          spec.axis_units)
        ax.set_title(f"{param} = {value}" if param else "region")
    fig.set_size_inches(4.0 * len(panels), 3.6)


def _render_waterfill(rows, spec, fig):
    branches = [("sensing", "#2ca02c"), ("comm", "#1f77b4")]
    axes = fig.subplots(1, 2, sharey=False)
    drew = False
    for ax, (branch, color) in zip(axes, branches):
        subset = [r for r in rows if r.get("branch") == branch]
        subset.sort(key=lambda r: int(r["mode_index"]))
        if not subset:
            ax.set_visible(False)
            continue
        idx = [int(r["mode_index"]) for r in subset]
        powers = [cell_float(r, "power") for r in subset]
        ax.bar(idx, powers, color=color, label="allocated power")
        level = cell_float(subset[0], "water_level")
        if level is not None:
            ax.axhline(level, color="#d62728", linestyle="--",
                       label="water level")
        ax.set_title(f"{branch}-optimal allocation")
        ax.set_xlabel("eigen-mode")
        ax.set_ylabel("power (W)")
        ax.legend(fontsize=8)
        drew = True
    if not drew:
        raise EmptyDataError("no sensing or comm branch rows in the CSV")
    fig.set_size_inches(8.0, 3.6)


def _render_compound(rows, spec, fig):
    rate_col = _rate_column(spec.axis_units)
    runs = [r for r in rows if r.get("strategy") == "compound"
            and cell_float(r, "t_pilot") is not None]
    runs.sort(key=lambda r: cell_float(r, "t_pilot"))
    if not runs:
        raise EmptyDataError("no compound-strategy rows in the CSV")
    base = [r for r in rows if r.get("strategy") == "noncoherent"]
    tps = [cell_float(r, "t_pilot") for r in runs]

    ax1, ax2 = fig.subplots(1, 2)
    ax1.errorbar(tps, [cell_float(r, rate_col) for r in runs],
                 yerr=[cell_float(r, "rate_stderr") or 0.0 for r in runs],
                 marker="o", color="#1f77b4", label="pilot-then-data")
    if base:
        baseline = cell_float(base[0], rate_col)
        if baseline is not None:
            ax1.axhline(baseline, color="#7f7f7f", linestyle="--",
                        label="non-coherent baseline")
    ax1.set_xlabel("pilot length (symbols)")
    ax1.set_ylabel(_rate_label(spec.axis_units))
    ax1.legend(fontsize=8)
    ax1.grid(True, alpha=0.3)

    ax2.plot(tps, [cell_float(r, "mmse") for r in runs], marker="s",
             color="#2ca02c", label="pilot-phase MMSE")
    sim = [cell_float(r, "estimation_mse") for r in runs]
    if all(v is not None for v in sim):
        ax2.errorbar(tps, sim,
                     yerr=[cell_float(r, "estimation_mse_stderr") or 0.0
                           for r in runs],
                     marker="x", linestyle=":", color="#d62728",
                     label="simulated MSE")
    ax2.set_xlabel("pilot length (symbols)")
    ax2.set_ylabel("estimation MSE")
    ax2.legend(fontsize=8)
    ax2.grid(True, alpha=0.3)
    fig.set_size_inches(8.0, 3.6)


def _render_ba_distributions(rows, spec, fig):
    variables = [v for v in ("input", "output")
                 if any(r.get("variable") == v for r in rows)]
    if not variables:
        raise EmptyDataError("no input/output distribution rows in the CSV")
    alphas = sorted({r["alpha"] for r in rows}, key=float)
    cmap = plt.get_cmap("viridis")
    axes = fig.subplots(1, len(variables))
    if len(variables) == 1:
        axes = [axes]
    for ax, var in zip(axes, variables):
        for k, a in enumerate(alphas):
            subset = [r for r in rows
                      if r.get("variable") == var and r["alpha"] == a]
            subset.sort(key=lambda r: cell_float(r, "grid"))
            if not subset:
                continue
            color = cmap(k / max(1, len(alphas) - 1))
            ax.plot([cell_float(r, "grid") for r in subset],
                    [cell_float(r, "mass") for r in subset],
                    color=color, label=f"α = {a}")
        ax.set_title(f"{var} distribution")
        ax.set_xlabel(var)
        ax.set_ylabel("probability mass")
        ax.legend(fontsize=7)
        ax.grid(True, alpha=0.3)
    fig.set_size_inches(4.0 * len(variables), 3.6)


_RENDERERS = {
    FigureKind.REGION: _render_region,
    FigureKind.SWEEP: _render_sweep,
    FigureKind.WATERFILL: _render_waterfill,
    FigureKind.COMPOUND: _render_compound,
    FigureKind.BA_DISTRIBUTIONS: _render_ba_distributions,
}


def render(spec: FigureSpec) -> None:
    """Validate the CSV, draw the requested figure, write the SVG."""
    rows = load_rows(spec.input_csv, spec.figure_kind)
    with plt.rc_context({"svg.hashsalt": HASH_SALT,
                         "figure.figsize": (5.0, 3.8),
                         "font.size": 10}):
        fig = plt.figure()
        try:
            _RENDERERS[spec.figure_kind](rows, spec, fig)
            fig.tight_layout()
            spec.output_path.parent.mkdir(parents=True, exist_ok=True)
            fig.savefig(spec.output_path, format="svg",
                        metadata={"Date": None})
        finally:
            plt.close(fig)
