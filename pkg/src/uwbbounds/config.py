"""JSON experiment configs: validation, defaults, sweeps, presets.

A config file is one JSON object. Scenario keys mirror ScenarioConfig; a
"sweep" object maps swept variables (l, d, eta1, eta2) to value lists, and
"bounds" selects which estimators run. Every loaded config materializes all
defaults, so the effective config written next to a result file reloads to
the identical sweep.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .model import InvalidParameterError, ScenarioConfig

_INT_KEYS = ("num_nodes", "codeword_len", "taps", "total_path_count",
             "samples_theta", "samples_pd", "samples_upper", "seed")
_FLOAT_KEYS = ("tx_power_w", "pathloss_b", "pathloss_alpha", "link_distance_m",
               "noise_var_w", "captured_energy_fraction")
_ARRAY_KEYS = ("duty_cycles", "interferer_distances_m")
_SCHEMA_ORDER = ("num_nodes", "codeword_len", "taps", "duty_cycles", "tx_power_w",
                 "pathloss_b", "pathloss_alpha", "link_distance_m",
                 "interferer_distances_m", "noise_var_w", "captured_energy_fraction",
                 "total_path_count", "samples_theta", "samples_pd", "samples_upper",
                 "seed", "h1_mode", "sweep", "bounds")

SWEEP_VARS = ("l", "d", "eta1", "eta2")
BOUND_CHOICES = ("lower", "upper", "both")

# full-size run vs a reduced instance whose CIs close in minutes
PRESETS = {
    "paper": {},
    "desk": {"codeword_len": 40, "taps": 3},
}


class ConfigError(Exception):
    """Config rejection with a machine-readable code: missing-file,
    malformed-json, unknown-key, bad-type, or bad-value."""

    def __init__(self, code: str, message: str):
        super().__init__(message)
        self.code = code


@dataclass(frozen=True)
class SweepSpec:
    """One experiment: a base scenario, swept variables in declaration order,
    and the bound selection."""

    base: ScenarioConfig
    sweep: dict[str, tuple] = field(default_factory=dict)
    bounds: str = "both"


def _is_number(x) -> bool:
    return isinstance(x, (int, float)) and not isinstance(x, bool)


def _reject_duplicates(pairs):
    out = {}
    for key, value in pairs:
        if key in out:
            raise ConfigError("malformed-json", f"duplicate key {key!r}")
        out[key] = value
    return out


def spec_from_mapping(data: dict, preset: str | None = None) -> SweepSpec:
    """Validate one parsed config object against the schema."""
    if preset is not None:
        if preset not in PRESETS:
            raise ConfigError("bad-value", f"unknown preset {preset!r}")
        merged = dict(PRESETS[preset])
        merged.update(data)
        data = merged
    allowed = set(_SCHEMA_ORDER)
    for key in data:
        if key not in allowed:
            raise ConfigError("unknown-key", f"unknown config key {key!r}")

    kwargs = {}
    for key in _INT_KEYS:
        if key in data:
            if not isinstance(data[key], int) or isinstance(data[key], bool):
                raise ConfigError("bad-type", f"{key} must be an integer")
            kwargs["rng_seed" if key == "seed" else key] = data[key]
    for key in _FLOAT_KEYS:
        if key in data:
            if not _is_number(data[key]):
                raise ConfigError("bad-type", f"{key} must be a number")
            kwargs[key] = float(data[key])
    for key in _ARRAY_KEYS:
        if key in data:
            if not isinstance(data[key], list) or not all(_is_number(x) for x in data[key]):
                raise ConfigError("bad-type", f"{key} must be an array of numbers")
            kwargs[key] = tuple(float(x) for x in data[key])
    if "h1_mode" in data:
        if not isinstance(data["h1_mode"], str):
            raise ConfigError("bad-type", "h1_mode must be a string")
        kwargs["h1_mode"] = data["h1_mode"]

    try:
        base = ScenarioConfig(**kwargs)
    except InvalidParameterError as err:
        raise ConfigError("bad-value", str(err)) from err

    bounds = data.get("bounds", "both")
    if not isinstance(bounds, str):
        raise ConfigError("bad-type", "bounds must be a string")
    if bounds not in BOUND_CHOICES:
        raise ConfigError("bad-value", f"bounds must be one of {BOUND_CHOICES}, got {bounds!r}")

    raw_sweep = data.get("sweep", {})
    if not isinstance(raw_sweep, dict):
        raise ConfigError("bad-type", "sweep must be an object")
    sweep: dict[str, tuple] = {}
    for var, values in raw_sweep.items():
        if var not in SWEEP_VARS:
            raise ConfigError("unknown-key", f"unknown sweep variable {var!r}")
        if not isinstance(values, list) or not values:
            raise ConfigError("bad-type", f"sweep.{var} must be a non-empty array")
        if not all(_is_number(x) for x in values):
            raise ConfigError("bad-type", f"sweep.{var} must contain only numbers")
        vals = tuple(float(x) for x in values)
        if var in ("eta1", "eta2") and not all(0.0 < x < 1.0 for x in vals):
            raise ConfigError("bad-value", f"sweep.{var} values must be in (0, 1)")
        if var in ("l", "d") and not all(x > 0.0 for x in vals):
            raise ConfigError("bad-value", f"sweep.{var} values must be > 0")
        if var in ("d", "eta2") and base.num_nodes < 2:
            raise ConfigError("bad-value", f"sweep.{var} needs at least one interferer")
        sweep[var] = vals
    return SweepSpec(base=base, sweep=sweep, bounds=bounds)


def load_config(path, preset: str | None = None) -> SweepSpec:
    """Parse and validate a JSON config file."""
    p = Path(path)
    if not p.is_file():
        raise ConfigError("missing-file", f"config file not found: {p}")
    try:
        data = json.loads(p.read_text(), object_pairs_hook=_reject_duplicates)
    except json.JSONDecodeError as err:
        raise ConfigError("malformed-json", f"{p}: {err}") from err
    if not isinstance(data, dict):
        raise ConfigError("malformed-json", f"{p}: top level must be an object")
    return spec_from_mapping(data, preset)


def effective_config(spec: SweepSpec) -> dict:
    """The fully materialized config; reloading it rebuilds the same SweepSpec."""
    cfg = spec.base
    return {
        "num_nodes": cfg.num_nodes,
        "codeword_len": cfg.codeword_len,
        "taps": cfg.taps,
        "duty_cycles": list(cfg.duty_cycles),
        "tx_power_w": cfg.tx_power_w,
        "pathloss_b": cfg.pathloss_b,
        "pathloss_alpha": cfg.pathloss_alpha,
        "link_distance_m": cfg.link_distance_m,
        "interferer_distances_m": list(cfg.interferer_distances_m),
        "noise_var_w": cfg.noise_var_w,
        "captured_energy_fraction": cfg.captured_energy_fraction,
        "total_path_count": cfg.total_path_count,
        "samples_theta": cfg.samples_theta,
        "samples_pd": cfg.samples_pd,
        "samples_upper": cfg.samples_upper,
        "seed": cfg.rng_seed,
        "h1_mode": cfg.h1_mode,
        "sweep": {var: list(vals) for var, vals in spec.sweep.items()},
        "bounds": spec.bounds,
    }
