"""Batch command-line interface: parse a scenario, run a mode, emit CSVs.

Usage::

    isac-limits <mode> --config scenario.yaml [--out-dir DIR] [--seed S]
                [--trials N] [--verbose]

Modes: ``waterfill`` (closed-form power allocations), ``region`` (outer/inner
bounds and time-sharing), ``siso-limit`` (scalar trade-off curve),
``compound`` (pilot-then-data sweep). Every run writes ``<mode>.csv`` plus a
``manifest.json`` echoing the resolved configuration. Exit codes: 0 success,
2 config error, 3 numerical non-convergence (partial output kept), 4
internal error.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import math
import sys
import time
import warnings
from pathlib import Path

import numpy as np

from . import __version__
from .ba import GridSpec, ba_solve, limit_curve, siso_endpoints
from .bounds import region_dataset
from .compound import compound_sweep
from .config import ScenarioConfig, parse_config
from .core import RngStream, SystemConfig
from .errors import (ConfigError, ConvergenceError, GridCoverageError,
                     IsacError)
from .points import MmseRatePoint
from .waterfill import comm_waterfill, ergodic_average, sensing_waterfill
from .sensing import MmseValue

STANDARD_COLUMNS = ("alpha", "provenance", "mmse", "mmse_stderr",
                    "rate_nats", "rate_bits", "rate_stderr", "converged")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NONCONVERGENCE = 3
EXIT_INTERNAL = 4


def _fmt(value) -> str:
    if value is None or value == "":
        return ""
    if isinstance(value, str):
        return value
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return f"{float(value):.17g}"


def _write_csv(path: Path, columns, rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_fmt(row.get(c)) for c in columns])


def _standard_cells(point: MmseRatePoint) -> dict:
    return {
        "alpha": point.alpha,
        "provenance": point.provenance.value,
        "mmse": point.mmse,
        "mmse_stderr": point.stderr_mmse,
        "rate_nats": point.rate_nats,
        "rate_bits": point.rate_nats / math.log(2.0),
        "rate_stderr": point.stderr_rate,
        "converged": point.converged,
    }


def _run_waterfill(scn: ScenarioConfig, cfg: SystemConfig, rng: RngStream,
                   out_dir: Path) -> tuple[list[Path], bool]:
    stats = scn.sensing_stats(cfg)
    wf_s, eps_s, _ = sensing_waterfill(stats, cfg)
    rate_c, rate_se = ergodic_average(
        lambda h: comm_waterfill(h, cfg)[1], cfg, rng.substream(0),
        n_trials=scn.channel_trials)
    # Representative realization for the per-mode comm allocation.
    from .core import sample_comm_channel
    h0 = sample_comm_channel(cfg, rng.substream(1))
    wf_c, _, _ = comm_waterfill(h0, cfg)

    columns = STANDARD_COLUMNS + ("branch", "mode_index", "gain", "power",
                                  "water_level")
    rows = []
    for i, (gain, power) in enumerate(zip(wf_s.gains, wf_s.powers)):
        rows.append({
            "alpha": 0.0, "provenance": "strategy", "mmse": eps_s.value,
            "mmse_stderr": 0.0, "rate_nats": "", "rate_bits": "",
            "rate_stderr": "", "converged": True, "branch": "sensing",
            "mode_index": i, "gain": gain, "power": power,
            "water_level": wf_s.water_level})
    for i, (gain, power) in enumerate(zip(wf_c.gains, wf_c.powers)):
        rows.append({
            "alpha": 1.0, "provenance": "strategy", "mmse": "",
            "mmse_stderr": "", "rate_nats": rate_c,
            "rate_bits": rate_c / math.log(2.0), "rate_stderr": rate_se,
            "converged": True, "branch": "comm", "mode_index": i,
            "gain": gain, "power": power, "water_level": wf_c.water_level})
    path = out_dir / "waterfill.csv"
    _write_csv(path, columns, rows)
    return [path], True


def _sweep_systems(scn: ScenarioConfig, cfg: SystemConfig):
    """Yield (sweep_param, sweep_value, system) for the configured sweep."""
    if scn.snr_sweep_db:
        for db in scn.snr_sweep_db:
            p0 = 10.0 ** (db / 10.0) / cfg.n_tx
            yield "snr_db", db, dataclasses.replace(cfg, per_antenna_power=p0)
    elif scn.t_sweep:
        for t in scn.t_sweep:
            yield "coherence_time", t, dataclasses.replace(cfg,
                                                           coherence_time=t)
    elif scn.ns_sweep:
        for ns in scn.ns_sweep:
            yield "n_rx_sense", ns, dataclasses.replace(cfg, n_rx_sense=ns)
    else:
        yield "", "", cfg


def _run_region(scn: ScenarioConfig, cfg: SystemConfig, rng: RngStream,
                out_dir: Path) -> tuple[list[Path], bool]:
    columns = STANDARD_COLUMNS + ("sweep_param", "sweep_value")
    rows = []
    all_ok = True
    for k, (param, value, system) in enumerate(_sweep_systems(scn, cfg)):
        stats = scn.sensing_stats(system)
        data = region_dataset(system, stats, scn.alphas, rng.substream(k),
                              n_channel=scn.channel_trials,
                              n_waveform=scn.waveform_trials)
        for key in ("outer", "sib", "cib", "ps_pc", "envelope", "limit",
                    "strategies"):
            for p in data[key]:
                cells = _standard_cells(p)
                cells["sweep_param"] = param
                cells["sweep_value"] = value
                rows.append(cells)
                all_ok = all_ok and p.converged
    path = out_dir / "region.csv"
    _write_csv(path, columns, rows)
    return [path], all_ok


def _run_siso_limit(scn: ScenarioConfig, cfg: SystemConfig, rng: RngStream,
                    out_dir: Path, verbose: bool) -> tuple[list[Path], bool]:
    grid = GridSpec(x_points=scn.x_points, y_points=scn.y_points)
    trace: list | None = [] if verbose else None
    points = limit_curve(scn.alphas, cfg, rng, n_channel=scn.channel_trials,
                         sigma_g2=scn.sigma_g2, grid_spec=grid, trace=trace)
    rows = [_standard_cells(p) for p in points]
    path = out_dir / "siso-limit.csv"
    _write_csv(path, STANDARD_COLUMNS, rows)
    paths = [path]

    # Input/output distributions at a fixed representative realization h=1.
    dist_rows = []
    for a in scn.alphas:
        if a in (0.0, 1.0):
            ends = siso_endpoints(1.0, cfg, scn.sigma_g2, grid)
            px = ends.p_x_sensing if a == 0.0 else ends.p_x_comm
            py = None
        else:
            res = ba_solve(a, 1.0, cfg, grid, scn.sigma_g2)
            px, py = res.p_x, res.p_y
        for x, m in zip(px.grid, px.mass):
            dist_rows.append({"alpha": a, "variable": "input", "grid": x,
                              "mass": m})
        if py is not None:
            for y, m in zip(py.grid, py.mass):
                dist_rows.append({"alpha": a, "variable": "output", "grid": y,
                                  "mass": m})
    dist_path = out_dir / "siso-limit_distributions.csv"
    _write_csv(dist_path, ("alpha", "variable", "grid", "mass"), dist_rows)
    paths.append(dist_path)

    if verbose and trace:
        trace_path = out_dir / "siso-limit_trace.csv"
        _write_csv(trace_path,
                   ("alpha", "channel_index", "iteration", "objective", "mu",
                    "rate_nats", "mmse"), trace)
        paths.append(trace_path)
    return paths, all(p.converged for p in points)


def _run_compound(scn: ScenarioConfig, cfg: SystemConfig, rng: RngStream,
                  out_dir: Path) -> tuple[list[Path], bool]:
    t_pilots = scn.t_pilots or (cfg.n_tx,)
    results, baseline = compound_sweep(t_pilots, cfg, rng,
                                       n_trials=cfg.mc_trials)
    base_rate, base_rate_se, base_mmse, base_mmse_se = baseline
    columns = STANDARD_COLUMNS + (
        "strategy", "t_pilot", "rate_pilot_nats", "rate_data_nats",
        "rate_data_on_estimate_nats", "estimation_mse",
        "estimation_mse_stderr")
    rows = []
    for res in results:
        rows.append({
            "alpha": "", "provenance": "strategy", "mmse": res.mmse,
            "mmse_stderr": 0.0, "rate_nats": res.rate_total_nats,
            "rate_bits": res.rate_total_nats / math.log(2.0),
            "rate_stderr": res.stderr_rate, "converged": True,
            "strategy": "compound", "t_pilot": res.t_pilot,
            "rate_pilot_nats": res.rate_pilot_nats,
            "rate_data_nats": res.rate_data_nats,
            "rate_data_on_estimate_nats": res.rate_data_on_estimate_nats,
            "estimation_mse": res.estimation_mse_simulated,
            "estimation_mse_stderr": res.estimation_mse_stderr})
    rows.append({
        "alpha": "", "provenance": "strategy", "mmse": base_mmse,
        "mmse_stderr": base_mmse_se, "rate_nats": base_rate,
        "rate_bits": base_rate / math.log(2.0), "rate_stderr": base_rate_se,
        "converged": True, "strategy": "noncoherent", "t_pilot": "",
        "rate_pilot_nats": "", "rate_data_nats": "",
        "rate_data_on_estimate_nats": "", "estimation_mse": "",
        "estimation_mse_stderr": ""})
    path = out_dir / "compound.csv"
    _write_csv(path, columns, rows)
    return [path], True


def run(mode: str, scn: ScenarioConfig, out_dir: Path,
        verbose: bool = False) -> tuple[list[Path], bool, list[str]]:
    """Execute one mode; returns (csv paths, all converged, warnings)."""
    if mode not in ("waterfill", "region", "siso-limit", "compound"):
        raise ConfigError(f"unknown mode: {mode}")
    if scn.mode != mode:
        raise ConfigError(
            f"config declares mode {scn.mode!r} but {mode!r} was requested")
    out_dir.mkdir(parents=True, exist_ok=True)
    cfg = scn.system
    rng = RngStream(cfg.rng_seed)
    caught: list[str] = []
    with warnings.catch_warnings(record=True) as wlist:
        warnings.simplefilter("always")
        if mode == "waterfill":
            paths, ok = _run_waterfill(scn, cfg, rng, out_dir)
        elif mode == "region":
            paths, ok = _run_region(scn, cfg, rng, out_dir)
        elif mode == "siso-limit":
            paths, ok = _run_siso_limit(scn, cfg, rng, out_dir, verbose)
        else:
            paths, ok = _run_compound(scn, cfg, rng, out_dir)
        caught = sorted({str(w.message) for w in wlist})
    return paths, ok, caught


def _write_manifest(out_dir: Path, scn: ScenarioConfig, paths: list[Path],
                    wall_time: float, warn: list[str]) -> None:
    manifest = {
        "artifact_version": __version__,
        "seed": scn.system.rng_seed,
        "config_echo": {
            "system": dataclasses.asdict(scn.system),
            "scenario": {k: v for k, v in dataclasses.asdict(scn).items()
                         if k != "system"},
        },
        "outputs": [p.name for p in paths],
        "wall_time_s": wall_time,
        "warnings": warn,
    }
    with open(out_dir / "manifest.json", "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="isac-limits",
        description="Sensing/communication performance-limit datasets")
    parser.add_argument("mode", choices=("waterfill", "region", "siso-limit",
                                         "compound"))
    parser.add_argument("--config", required=True, help="scenario YAML file")
    parser.add_argument("--out-dir", default=".", help="output directory")
    parser.add_argument("--seed", type=int, default=None,
                        help="override system.rng_seed")
    parser.add_argument("--trials", type=int, default=None,
                        help="override system.mc_trials")
    parser.add_argument("--verbose", action="store_true",
                        help="emit per-solve convergence traces")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    start = time.monotonic()
    try:
        scn = parse_config(args.config)
        overrides = {}
        if args.seed is not None:
            overrides["rng_seed"] = args.seed
        if args.trials is not None:
            overrides["mc_trials"] = args.trials
        if overrides:
            scn = dataclasses.replace(
                scn, system=dataclasses.replace(scn.system, **overrides))
        out_dir = Path(args.out_dir)
        paths, ok, warn = run(args.mode, scn, out_dir, args.verbose)
        _write_manifest(out_dir, scn, paths, time.monotonic() - start, warn)
        for w in warn:
            print(f"warning: {w}", file=sys.stderr)
        if not ok:
            print("warning: some points did not converge (flagged in CSV)",
                  file=sys.stderr)
            return EXIT_NONCONVERGENCE
        return EXIT_OK
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ConvergenceError, GridCoverageError) as exc:
        print(f"non-convergence: {exc}", file=sys.stderr)
        return EXIT_NONCONVERGENCE
    except IsacError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    except Exception as exc:  # noqa: BLE001 - map anything else to exit 4
        print(f"internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
