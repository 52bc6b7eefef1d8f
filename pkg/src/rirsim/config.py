"""Declarative experiment configuration.

Config files are YAML with up to six sections; every key is validated and
unknown keys are rejected with the full field path so typos surface
immediately.  All quantities cross this interface in bench units
(microkelvin, degrees, nanometers, MHz/kHz, microseconds) and are converted
once, here, into SI for the physics layer.

    command: write-spectrum          # optional: preset files carry one
    params:
      temperature_uk: 500.0
      theta_deg: 1.0
      wavelength_nm: 852.3
      delta_e_mhz: 200.0
      omega_e_khz: 50.0
      omega_p_khz: 5.0
      validity_factor: 10.0
    numerics:
      momentum_halfwidth: 6.0
      num_points: 4001
      scheme: trapezoid
      population_mode: gaussian_derivative
      oracle_max_kicks: 3
      oracle_num_samples: 201
      oracle_dt_safety: 50.0
    schedule:
      t1_us: 102.0
      t2_us: 107.0
      read_end_us: 140.0
    scan:
      delta_min_khz: -10.0
      delta_max_khz: 10.0
      delta_step_khz: 0.1
      delta_list_khz: [0.0, 8.0, -8.0]
      times_us: [100.0, 2761.0]
      t_start_us: 1.0
      t_end_us: 2000.0
      t_step_us: 2.0
      channels: [transmission, ffwm]
      single_group_py_over_pu: 1.0
      temperatures_uk: [125.0, 500.0, 1000.0]
    output:
      directory: out
      format: csv
      normalization: physical_prefactor
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field

import numpy as np
import yaml

from .kernels import QuadratureSpec
from .memory import PhaseSchedule, WindowError
from .params import (
    PhysicalParams,
    ValidationError,
    cesium_params,
    rad_per_s_from_khz,
    seconds_from_us,
)
from .writing import NORMALIZATION_PEAK, NORMALIZATION_PHYSICAL, POPULATION_MODES

__all__ = [
    "ParseError",
    "ExperimentConfig",
    "ScanSettings",
    "OracleSettings",
    "OutputSettings",
    "parse_config",
    "load_config",
    "config_sha256",
    "COMMANDS",
]

COMMANDS = (
    "write-spectrum",
    "write-profile",
    "memory-spectrum",
    "memory-profile",
    "oracle-check",
    "linewidth-evolution",
    "thermometry",
)

_SIGNAL_CHANNELS = ("transmission", "ffwm", "retrieved_probe", "retrieved_ffwm")


class ParseError(ValueError):
    """The config text is not well-formed YAML / not a mapping."""


@dataclass(frozen=True)
class OracleSettings:
    max_kicks: int = 3
    num_samples: int = 201
    dt_safety: float = 50.0


@dataclass(frozen=True)
class ScanSettings:
    """Grids requested by the scan section, already in SI units."""

    detunings: np.ndarray | None = None          # rad/s, spectrum axis
    delta_list: tuple = ()                       # rad/s, profile detunings
    times: tuple = ()                            # s, spectrum eval times
    profile_times: np.ndarray | None = None      # s, profile axis
    channels: tuple = ()
    single_group_py_over_pu: float | None = None
    temperatures_uk: tuple = ()


@dataclass(frozen=True)
class OutputSettings:
    directory: str = "out"
    format: str = "csv"
    normalization: str = NORMALIZATION_PHYSICAL


@dataclass(frozen=True)
class ExperimentConfig:
    command: str | None
    params: PhysicalParams
    quad: QuadratureSpec
    population_mode: str
    oracle: OracleSettings
    schedule: PhaseSchedule | None
    scan: ScanSettings
    output: OutputSettings
    raw: dict = field(repr=False)


def _require_mapping(obj, path: str) -> dict:
    if obj is None:
        return {}
    if not isinstance(obj, dict):
        raise ValidationError(f"{path}: expected a mapping, got {type(obj).__name__}")
    return obj


def _reject_unknown(section: dict, allowed, path: str) -> None:
    for key in section:
        if key not in allowed:
            raise ValidationError(f"{path}.{key}: unknown key")


def _number(section: dict, key: str, path: str, default=None):
    if key not in section or section[key] is None:
        return default
    value = section[key]
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ValidationError(f"{path}.{key}: expected a number, got {value!r}")
    value = float(value)
    if not math.isfinite(value):
        raise ValidationError(f"{path}.{key}: must be finite")
    return value


def _integer(section: dict, key: str, path: str, default=None):
    if key not in section or section[key] is None:
        return default
    value = section[key]
    if isinstance(value, bool) or not isinstance(value, int):
        raise ValidationError(f"{path}.{key}: expected an integer, got {value!r}")
    return value


def _string(section: dict, key: str, path: str, default=None, choices=None):
    if key not in section or section[key] is None:
        return default
    value = section[key]
    if not isinstance(value, str):
        raise ValidationError(f"{path}.{key}: expected a string, got {value!r}")
    if choices is not None and value not in choices:
        raise ValidationError(
            f"{path}.{key}: must be one of {', '.join(choices)}; got {value!r}"
        )
    return value


def _number_list(section: dict, key: str, path: str):
    if key not in section or section[key] is None:
        return None
    value = section[key]
    if not isinstance(value, (list, tuple)) or not value:
        raise ValidationError(f"{path}.{key}: expected a non-empty list of numbers")
    out = []
    for i, item in enumerate(value):
        if isinstance(item, bool) or not isinstance(item, (int, float)):
            raise ValidationError(f"{path}.{key}[{i}]: expected a number, got {item!r}")
        if not math.isfinite(float(item)):
            raise ValidationError(f"{path}.{key}[{i}]: must be finite")
        out.append(float(item))
    return out


def _parse_params(section: dict) -> PhysicalParams:
    _reject_unknown(section, (
        "temperature_uk", "theta_deg", "wavelength_nm", "delta_e_mhz",
        "omega_e_khz", "omega_p_khz", "validity_factor",
    ), "params")
    kwargs = {}
    for key in ("temperature_uk", "theta_deg", "wavelength_nm", "delta_e_mhz",
                "omega_e_khz", "omega_p_khz", "validity_factor"):
        value = _number(section, key, "params")
        if value is not None:
            kwargs[key] = value
    try:
        return cesium_params(**kwargs)
    except ValidationError as exc:
        raise ValidationError(f"params: {exc}") from exc


def _parse_numerics(section: dict):
    _reject_unknown(section, (
        "momentum_halfwidth", "num_points", "scheme", "population_mode",
        "oracle_max_kicks", "oracle_num_samples", "oracle_dt_safety",
    ), "numerics")
    try:
        quad = QuadratureSpec(
            momentum_halfwidth=_number(section, "momentum_halfwidth",
                                       "numerics", 6.0),
            num_points=_integer(section, "num_points", "numerics", 4001),
            scheme=_string(section, "scheme", "numerics", "trapezoid",
                           ("trapezoid", "gauss_weighted")),
        )
    except (ValueError, TypeError) as exc:
        raise ValidationError(f"numerics: {exc}") from exc
    mode = _string(section, "population_mode", "numerics",
                   "gaussian_derivative", POPULATION_MODES)
    oracle = OracleSettings(
        max_kicks=_integer(section, "oracle_max_kicks", "numerics", 3),
        num_samples=_integer(section, "oracle_num_samples", "numerics", 201),
        dt_safety=_number(section, "oracle_dt_safety", "numerics", 50.0),
    )
    if oracle.max_kicks < 2:
        raise ValidationError("numerics.oracle_max_kicks: must be >= 2")
    if oracle.num_samples < 101 or oracle.num_samples % 2 == 0:
        raise ValidationError("numerics.oracle_num_samples: must be odd and >= 101")
    if oracle.dt_safety < 1.0:
        raise ValidationError("numerics.oracle_dt_safety: must be >= 1")
    return quad, mode, oracle


def _parse_schedule(section: dict) -> PhaseSchedule | None:
    if not section:
        return None
    _reject_unknown(section, ("t1_us", "t2_us", "read_end_us"), "schedule")
    t1 = _number(section, "t1_us", "schedule")
    t2 = _number(section, "t2_us", "schedule")
    end = _number(section, "read_end_us", "schedule")
    if t1 is None:
        raise ValidationError("schedule.t1_us: required when a schedule is given")
    if t2 is None:
        t2 = t1
    if end is None:
        end = t2
    if t2 < t1:
        raise ValidationError(
            f"schedule.t2_us: read start {t2!r} precedes write end {t1!r}"
        )
    if end < t2:
        raise ValidationError(
            f"schedule.read_end_us: window end {end!r} precedes read start {t2!r}"
        )
    try:
        return PhaseSchedule(t1=seconds_from_us(t1), t2=seconds_from_us(t2),
                             t_read_end=seconds_from_us(end))
    except (WindowError, ValueError) as exc:
        raise ValidationError(f"schedule: {exc}") from exc


def _parse_scan(section: dict) -> ScanSettings:
    _reject_unknown(section, (
        "delta_min_khz", "delta_max_khz", "delta_step_khz", "delta_list_khz",
        "times_us", "t_start_us", "t_end_us", "t_step_us", "channels",
        "single_group_py_over_pu", "temperatures_uk",
    ), "scan")
    lo = _number(section, "delta_min_khz", "scan")
    hi = _number(section, "delta_max_khz", "scan")
    step = _number(section, "delta_step_khz", "scan")
    detunings = None
    if lo is not None or hi is not None or step is not None:
        if lo is None or hi is None or step is None:
            raise ValidationError(
                "scan.delta_min_khz/delta_max_khz/delta_step_khz: "
                "all three are required to define a detuning range"
            )
        if step <= 0.0:
            raise ValidationError("scan.delta_step_khz: must be > 0")
        if hi <= lo:
            raise ValidationError("scan.delta_max_khz: must exceed delta_min_khz")
        count = int(round((hi - lo) / step)) + 1
        detunings = rad_per_s_from_khz(lo + step * np.arange(count))
    delta_list = _number_list(section, "delta_list_khz", "scan") or []
    times = _number_list(section, "times_us", "scan") or []
    t_start = _number(section, "t_start_us", "scan")
    t_end = _number(section, "t_end_us", "scan")
    t_step = _number(section, "t_step_us", "scan")
    profile_times = None
    if t_start is not None or t_end is not None or t_step is not None:
        if t_start is None or t_end is None or t_step is None:
            raise ValidationError(
                "scan.t_start_us/t_end_us/t_step_us: all three are required "
                "to define a time grid"
            )
        if t_step <= 0.0 or t_end <= t_start:
            raise ValidationError("scan.t_step_us: needs t_step_us > 0 and "
                                  "t_end_us > t_start_us")
        count = int(round((t_end - t_start) / t_step)) + 1
        profile_times = seconds_from_us(t_start + t_step * np.arange(count))
    channels = section.get("channels")
    if channels is None:
        channels = []
    if not isinstance(channels, (list, tuple)):
        raise ValidationError("scan.channels: expected a list of channel names")
    for ch in channels:
        if ch not in _SIGNAL_CHANNELS:
            raise ValidationError(
                f"scan.channels: unknown channel {ch!r}; choose from "
                f"{', '.join(_SIGNAL_CHANNELS)}"
            )
    single_group = _number(section, "single_group_py_over_pu", "scan")
    temps = _number_list(section, "temperatures_uk", "scan") or []
    for i, temp in enumerate(temps):
        if temp <= 0.0:
            raise ValidationError(f"scan.temperatures_uk[{i}]: must be > 0")
    return ScanSettings(
        detunings=detunings,
        delta_list=tuple(rad_per_s_from_khz(d) for d in delta_list),
        times=tuple(seconds_from_us(t) for t in times),
        profile_times=profile_times,
        channels=tuple(channels),
        single_group_py_over_pu=single_group,
        temperatures_uk=tuple(temps),
    )


def _parse_output(section: dict) -> OutputSettings:
    _reject_unknown(section, ("directory", "format", "normalization"), "output")
    return OutputSettings(
        directory=_string(section, "directory", "output", "out"),
        format=_string(section, "format", "output", "csv", ("csv",)),
        normalization=_string(section, "normalization", "output",
                              NORMALIZATION_PHYSICAL,
                              (NORMALIZATION_PHYSICAL, NORMALIZATION_PEAK)),
    )


def parse_config(text: str) -> ExperimentConfig:
    """Parse and fully validate a YAML config document."""
    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f" at line {mark.line + 1}" if mark is not None else ""
        raise ParseError(f"malformed config{where}: {exc}") from exc
    raw = _require_mapping(raw, "config")
    _reject_unknown(raw, ("command", "params", "numerics", "schedule",
                          "scan", "output"), "config")
    command = _string(raw, "command", "config", None, COMMANDS)
    params = _parse_params(_require_mapping(raw.get("params"), "params"))
    quad, mode, oracle = _parse_numerics(
        _require_mapping(raw.get("numerics"), "numerics"))
    schedule = _parse_schedule(_require_mapping(raw.get("schedule"), "schedule"))
    scan = _parse_scan(_require_mapping(raw.get("scan"), "scan"))
    output = _parse_output(_require_mapping(raw.get("output"), "output"))
    return ExperimentConfig(
        command=command,
        params=params,
        quad=quad,
        population_mode=mode,
        oracle=oracle,
        schedule=schedule,
        scan=scan,
        output=output,
        raw=raw,
    )


def load_config(path) -> ExperimentConfig:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_config(fh.read())


def config_sha256(config: ExperimentConfig) -> str:
    """Hash of the canonical JSON form of the parsed document.

    Formatting and key order in the source file do not change the hash;
    any semantic change does.
    """
    canonical = json.dumps(config.raw, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()
