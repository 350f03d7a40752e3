"""Scenario-file parsing and validation.

The config file is YAML with two sections::

    system:            # every field of SystemConfig, all optional
      n_tx: 2
      per_antenna_power: 1.0
      ...
    scenario:
      mode: region     # waterfill | region | siso-limit | compound
      alphas: [0.0, 0.25, 0.5, 0.75, 1.0]
      sensing_cov:
        kind: identity         # identity | scaled-identity | eigenvalues | matrix
        trace: 0.18            # scaled-identity only
        eigenvalues: [..]      # eigenvalues only (length n_tx)
        matrix: [[..], ..]     # matrix only (real entries)
      sigma_g2: 1.0            # scalar sensing prior variance (siso-limit)
      channel_trials: 50       # SAA channel draws for curve averaging
      waveform_trials: 50      # inner waveform draws for Gaussian-signal MMSE
      t_pilots: [6, 12, 24]    # compound mode pilot lengths
      x_points: 201            # scalar-solver grids
      y_points: 401
      snr_sweep_db: []         # region mode: one sweep list at most
      t_sweep: []
      ns_sweep: []

Unknown keys anywhere are rejected. Units: watts, symbols, nats.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import yaml

from .core import SensingChannelStats, SystemConfig
from .errors import ConfigError

MODES = ("waterfill", "region", "siso-limit", "compound")

_SYSTEM_KEYS = {
    "n_tx": int, "n_rx_comm": int, "n_rx_sense": int, "coherence_time": int,
    "per_antenna_power": float, "comm_noise_var": float,
    "sense_noise_var": float, "comm_channel_var": float, "mc_trials": int,
    "rng_seed": int, "ba_tol_perf": float, "ba_tol_mult": float,
}

_SCENARIO_KEYS = ("mode", "alphas", "sensing_cov", "sigma_g2",
                  "channel_trials", "waveform_trials", "t_pilots",
                  "x_points", "y_points", "snr_sweep_db", "t_sweep",
                  "ns_sweep")

_COV_KEYS = ("kind", "trace", "eigenvalues", "matrix")
_COV_KINDS = ("identity", "scaled-identity", "eigenvalues", "matrix")


@dataclass(frozen=True)
class ScenarioConfig:
    """Validated scenario section plus the resolved system config."""

    system: SystemConfig
    mode: str
    alphas: tuple[float, ...] = (0.0, 0.25, 0.5, 0.75, 1.0)
    cov_kind: str = "identity"
    cov_trace: float | None = None
    cov_eigenvalues: tuple[float, ...] | None = None
    cov_matrix: tuple | None = None
    sigma_g2: float = 1.0
    channel_trials: int = 50
    waveform_trials: int = 50
    t_pilots: tuple[int, ...] = ()
    x_points: int = 201
    y_points: int = 401
    snr_sweep_db: tuple[float, ...] = ()
    t_sweep: tuple[int, ...] = ()
    ns_sweep: tuple[int, ...] = ()

    def sensing_stats(self, system: SystemConfig | None = None
                      ) -> SensingChannelStats:
        """Materialize the sensing covariance for a (possibly swept) system."""
        cfg = system or self.system
        n = cfg.n_tx
        if self.cov_kind == "identity":
            sigma = np.eye(n)
        elif self.cov_kind == "scaled-identity":
            sigma = (self.cov_trace / n) * np.eye(n)
        elif self.cov_kind == "eigenvalues":
            if len(self.cov_eigenvalues) != n:
                raise ConfigError(
                    f"sensing_cov.eigenvalues needs {n} entries, got "
                    f"{len(self.cov_eigenvalues)}")
            sigma = np.diag(self.cov_eigenvalues)
        else:
            sigma = np.array(self.cov_matrix, dtype=float)
            if sigma.shape != (n, n):
                raise ConfigError(
                    f"sensing_cov.matrix must be {n}x{n}, got {sigma.shape}")
        return SensingChannelStats.from_block(sigma, cfg.n_rx_sense)


def _reject_unknown(section: dict, allowed, where: str) -> None:
    unknown = [k for k in section if k not in allowed]
    if unknown:
        raise ConfigError(f"unknown key(s) in {where}: {', '.join(sorted(unknown))}")


def _coerce(value, typ, key: str):
    if typ is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{key} must be an integer, got {value!r}")
        return value
    if typ is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{key} must be a number, got {value!r}")
        return float(value)
    return value


def parse_config_dict(doc: dict) -> ScenarioConfig:
    if not isinstance(doc, dict):
        raise ConfigError("config root must be a mapping")
    _reject_unknown(doc, ("system", "scenario"), "config root")
    system_raw = doc.get("system", {}) or {}
    scenario_raw = doc.get("scenario", {}) or {}
    if not isinstance(system_raw, dict):
        raise ConfigError("'system' must be a mapping")
    if not isinstance(scenario_raw, dict):
        raise ConfigError("'scenario' must be a mapping")
    _reject_unknown(system_raw, _SYSTEM_KEYS, "system")
    _reject_unknown(scenario_raw, _SCENARIO_KEYS, "scenario")

    sys_kwargs = {k: _coerce(v, _SYSTEM_KEYS[k], f"system.{k}")
                  for k, v in system_raw.items()}
    system = SystemConfig(**sys_kwargs)

    mode = scenario_raw.get("mode")
    if mode is None:
        raise ConfigError("scenario.mode is required")
    if mode not in MODES:
        raise ConfigError(f"scenario.mode must be one of {MODES}, got {mode!r}")

    cov_raw = scenario_raw.get("sensing_cov", {}) or {}
    if not isinstance(cov_raw, dict):
        raise ConfigError("scenario.sensing_cov must be a mapping")
    _reject_unknown(cov_raw, _COV_KEYS, "scenario.sensing_cov")
    kind = cov_raw.get("kind", "identity")
    if kind not in _COV_KINDS:
        raise ConfigError(
            f"sensing_cov.kind must be one of {_COV_KINDS}, got {kind!r}")
    trace = cov_raw.get("trace")
    eigs = cov_raw.get("eigenvalues")
    matrix = cov_raw.get("matrix")
    if kind == "scaled-identity":
        if trace is None or float(trace) <= 0:
            raise ConfigError("sensing_cov.trace must be positive for "
                              "kind=scaled-identity")
        trace = float(trace)
    if kind == "eigenvalues":
        if not eigs or any(e < 0 for e in eigs):
            raise ConfigError("sensing_cov.eigenvalues must be a nonnegative "
                              "list for kind=eigenvalues")
        eigs = tuple(float(e) for e in eigs)
    if kind == "matrix" and matrix is None:
        raise ConfigError("sensing_cov.matrix required for kind=matrix")

    alphas = scenario_raw.get("alphas", (0.0, 0.25, 0.5, 0.75, 1.0))
    try:
        alphas = tuple(float(a) for a in alphas)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"scenario.alphas must be a number list: {exc}")
    if any(not 0.0 <= a <= 1.0 for a in alphas):
        raise ConfigError("scenario.alphas entries must lie in [0, 1]")

    def pos_int(key: str, default: int) -> int:
        v = scenario_raw.get(key, default)
        v = _coerce(v, int, f"scenario.{key}")
        if v <= 0:
            raise ConfigError(f"scenario.{key} must be positive, got {v}")
        return v

    sigma_g2 = _coerce(scenario_raw.get("sigma_g2", 1.0), float,
                       "scenario.sigma_g2")
    if sigma_g2 <= 0:
        raise ConfigError(f"scenario.sigma_g2 must be positive, got {sigma_g2}")

    t_pilots = tuple(int(tp) for tp in scenario_raw.get("t_pilots", ()))
    sweeps = {
        "snr_sweep_db": tuple(float(x) for x in
                              scenario_raw.get("snr_sweep_db", ())),
        "t_sweep": tuple(int(x) for x in scenario_raw.get("t_sweep", ())),
        "ns_sweep": tuple(int(x) for x in scenario_raw.get("ns_sweep", ())),
    }
    if sum(1 for v in sweeps.values() if v) > 1:
        raise ConfigError("at most one of snr_sweep_db / t_sweep / ns_sweep "
                          "may be set")

    return ScenarioConfig(
        system=system, mode=mode, alphas=alphas, cov_kind=kind,
        cov_trace=trace, cov_eigenvalues=eigs,
        cov_matrix=tuple(map(tuple, matrix)) if matrix is not None else None,
        sigma_g2=sigma_g2,
        channel_trials=pos_int("channel_trials", 50),
        waveform_trials=pos_int("waveform_trials", 50),
        t_pilots=t_pilots,
        x_points=pos_int("x_points", 201),
        y_points=pos_int("y_points", 401),
        **sweeps)


def parse_config(path: str) -> ScenarioConfig:
    """Load and validate a scenario file (fail-closed on unknown keys)."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = yaml.safe_load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}")
    except yaml.YAMLError as exc:
        raise ConfigError(f"config file is not valid YAML: {exc}")
    if doc is None:
        raise ConfigError(f"config file is empty: {path}")
    return parse_config_dict(doc)
