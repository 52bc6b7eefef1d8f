"""Experiment runner: executes a parsed config and writes flat artifacts.

Output contract
---------------
Every run produces one CSV per (channel, scan) plus a manifest.json.  CSVs
carry a single header line and 17-significant-digit values, so reruns of
the same config are byte-identical, independent of worker count.  The
manifest lists every emitted file with row count and sha256, echoes the
derived physical scales, and records per-point failures instead of
aborting a whole scan (status "partial", CLI exit code 4).
"""

from __future__ import annotations

import hashlib
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from . import analysis, memory, oracle, writing
from ._version import __version__
from .config import ExperimentConfig, config_sha256
from .params import (
    ValidationError,
    derive,
    kelvin_from_uk,
    khz_from_rad_per_s,
    us_from_seconds,
)
from .writing import NORMALIZATION_PEAK

__all__ = ["RunManifest", "run"]

_WRITE_CHANNELS = ("transmission", "ffwm")
_READ_CHANNELS = ("retrieved_probe", "retrieved_ffwm")


@dataclass(frozen=True)
class RunManifest:
    """Summary of one run; serialized to manifest.json with sorted keys."""

    command: str
    config_sha256: str
    tool_version: str
    derived: dict
    outputs: tuple
    failures: tuple
    status: str

    def to_dict(self) -> dict:
        return {
            "command": self.command,
            "config_sha256": self.config_sha256,
            "tool_version": self.tool_version,
            "derived": self.derived,
            "outputs": [dict(o) for o in self.outputs],
            "failures": [dict(f) for f in self.failures],
            "status": self.status,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2) + "\n"


def _fmt(x: float) -> str:
    return f"{float(x):.17g}"


def _write_text(path: str, text: str) -> dict:
    data = text.encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(data)
    rows = max(0, text.count("\n") - 1)
    return {
        "path": os.path.basename(path),
        "rows": rows,
        "sha256": hashlib.sha256(data).hexdigest(),
    }


def _csv(header: str, rows) -> str:
    lines = [header]
    lines.extend(",".join(cells) for cells in rows)
    return "\n".join(lines) + "\n"


def _maybe_peak_normalize(values: np.ndarray, enabled: bool) -> np.ndarray:
    if not enabled:
        return values
    finite = values[np.isfinite(values)]
    if finite.size == 0:
        return values
    scale = float(np.max(np.abs(finite)))
    if scale == 0.0:
        return values
    return values / scale


def _pmap(fn, items, workers: int):
    """Order-preserving map with per-item error capture.

    Results are (value, None) or (None, repr(error)).  Each item is pure and
    self-contained, so the values are identical regardless of worker count.
    """
    items = list(items)
    if workers <= 1 or len(items) <= 1:
        out = []
        for item in items:
            try:
                out.append((fn(item), None))
            except Exception as exc:
                out.append((None, f"{type(exc).__name__}: {exc}"))
        return out
    out = []
    with ProcessPoolExecutor(max_workers=workers) as pool:
        futures = [pool.submit(fn, item) for item in items]
        for future in futures:
            try:
                out.append((future.result(), None))
            except Exception as exc:
                out.append((None, f"{type(exc).__name__}: {exc}"))
    return out


# ---------------------------------------------------------------------------
# picklable per-point workers

def _write_point(args):
    params, derived, quad, delta, t, channel, mode = args
    if channel == "transmission":
        return writing.transmission_value(params, derived, quad, delta, t,
                                          mode=mode)
    return writing.ffwm_value(params, derived, quad, delta, t, mode=mode)


def _write_profile_delta(args):
    params, derived, quad, delta, times, channel, mode = args
    if channel == "transmission":
        prof = writing.transmission_time_profile(params, derived, quad, delta,
                                                 times, mode=mode)
    else:
        prof = writing.ffwm_time_profile(params, derived, quad, delta, times,
                                         mode=mode)
    return prof.values


def _memory_delta(args):
    params, derived, quad, delta, t1, times, channels, mode = args
    stored = memory.stored_coherence(params, derived, quad, delta, t1,
                                     mode=mode, resolve_until=max(times))
    out = {}
    for channel in channels:
        fn = (memory.retrieved_probe_value if channel == "retrieved_probe"
              else memory.retrieved_ffwm_value)
        out[channel] = [fn(stored, t) for t in times]
    return out


def _memory_profile_delta(args):
    params, derived, quad, delta, t1, t2, times, channels, mode = args
    stored = memory.stored_coherence(params, derived, quad, delta, t1,
                                     mode=mode, resolve_until=max(times))
    out = {}
    for channel in channels:
        fn = (memory.retrieved_probe_value if channel == "retrieved_probe"
              else memory.retrieved_ffwm_value)
        vals = []
        for t in times:
            if t < t2:
                vals.append(abs(memory.dark_phase_coherence(delta, t)))
            else:
                vals.append(fn(stored, t))
        out[channel] = vals
    return out


def _linewidth_channel(args):
    params, derived, quad, channel, times, schedule, mode = args
    return analysis.linewidth_evolution(params, derived, quad, channel, times,
                                        schedule=schedule, mode=mode)


def _thermometry_case(args):
    params, quad, temperature_uk, mode = args
    case = replace(params, temperature=kelvin_from_uk(temperature_uk))
    d = derive(case)
    t_stat = 15.0 * d.tau_stationary
    grid = np.linspace(-6.0 * d.doppler_width, 6.0 * d.doppler_width, 801)
    rows = []
    spec = writing.transmission_spectrum(case, d, quad, grid, t_stat, mode=mode)
    rep = analysis.gain_absorption_separation(spec)
    rows.append(("transmission", rep.metric, rep.width,
                 analysis.temperature_from_separation(rep.width, d)))
    spec = writing.ffwm_spectrum(case, d, quad, grid, t_stat, mode=mode)
    rep = analysis.fwhm(spec)
    rows.append(("ffwm", rep.metric, rep.width,
                 analysis.temperature_from_separation(
                     rep.width, d, metric=analysis.METRIC_FWHM)))
    return rows


# ---------------------------------------------------------------------------
# per-command executors; each returns (outputs, failures)

def _require(cond: bool, message: str) -> None:
    if not cond:
        raise ValidationError(message)


def _channels_for(config: ExperimentConfig, allowed) -> tuple:
    chans = config.scan.channels or allowed
    for ch in chans:
        _require(ch in allowed,
                 f"scan.channels: {ch!r} not valid for this command "
                 f"(expected subset of {', '.join(allowed)})")
    return tuple(chans)


def _run_write_spectrum(config, out_dir, normalize, workers):
    scan = config.scan
    _require(scan.detunings is not None,
             "scan.delta_min_khz/delta_max_khz/delta_step_khz: required")
    _require(len(scan.times) > 0, "scan.times_us: required")
    channels = _channels_for(config, _WRITE_CHANNELS)
    params, quad, mode = config.params, config.quad, config.population_mode
    d = derive(params)
    outputs, failures = [], []
    for channel in channels:
        for i, t in enumerate(scan.times):
            jobs = [(params, d, quad, delta, t, channel, mode)
                    for delta in scan.detunings]
            results = _pmap(_write_point, jobs, workers)
            values = np.array([float("nan") if err else val
                               for val, err in results])
            name = f"{channel}_spectrum_{i:02d}.csv"
            for j, (_val, err) in enumerate(results):
                if err:
                    failures.append({"file": name, "index": j, "error": err})
            values = _maybe_peak_normalize(values, normalize)
            rows = [(_fmt(khz_from_rad_per_s(delta)), _fmt(v), channel,
                     _fmt(us_from_seconds(t)))
                    for delta, v in zip(scan.detunings, values)]
            text = _csv("detuning_khz,value,channel,eval_time_us", rows)
            outputs.append(_write_text(os.path.join(out_dir, name), text))
    return outputs, failures


def _run_write_profile(config, out_dir, normalize, workers):
    scan = config.scan
    _require(scan.profile_times is not None,
             "scan.t_start_us/t_end_us/t_step_us: required")
    _require(len(scan.delta_list) > 0, "scan.delta_list_khz: required")
    channels = _channels_for(config, _WRITE_CHANNELS)
    params, quad, mode = config.params, config.quad, config.population_mode
    d = derive(params)
    times = scan.profile_times
    outputs, failures = [], []
    jobs = [(params, d, quad, delta, times, channel, mode)
            for channel in channels for delta in scan.delta_list]
    results = _pmap(_write_profile_delta, jobs, workers)
    k = 0
    for channel in channels:
        for i, delta in enumerate(scan.delta_list):
            vals, err = results[k]
            k += 1
            name = f"{channel}_profile_{i:02d}.csv"
            if err:
                failures.append({"file": name, "index": None, "error": err})
                vals = np.full(times.size, float("nan"))
            vals = _maybe_peak_normalize(np.asarray(vals, dtype=float), normalize)
            rows = [(_fmt(us_from_seconds(t)), _fmt(v), channel,
                     _fmt(khz_from_rad_per_s(delta)))
                    for t, v in zip(times, vals)]
            text = _csv("time_us,value,channel,detuning_khz", rows)
            outputs.append(_write_text(os.path.join(out_dir, name), text))
    if scan.single_group_py_over_pu is not None:
        p_y = scan.single_group_py_over_pu * d.p_u
        for i, delta in enumerate(scan.delta_list):
            prof = writing.single_group_profile(params, d, p_y, delta, times,
                                                mode=mode)
            vals = _maybe_peak_normalize(prof.values, normalize)
            rows = [(_fmt(us_from_seconds(t)), _fmt(v), prof.channel,
                     _fmt(khz_from_rad_per_s(delta)))
                    for t, v in zip(times, vals)]
            text = _csv("time_us,value,channel,detuning_khz", rows)
            name = f"single_group_profile_{i:02d}.csv"
            outputs.append(_write_text(os.path.join(out_dir, name), text))
    return outputs, failures


def _run_memory_spectrum(config, out_dir, normalize, workers):
    scan, schedule = config.scan, config.schedule
    _require(schedule is not None, "schedule: required for memory commands")
    _require(scan.detunings is not None,
             "scan.delta_min_khz/delta_max_khz/delta_step_khz: required")
    _require(len(scan.times) > 0, "scan.times_us: required")
    for t in scan.times:
        _require(schedule.t2 <= t <= schedule.t_read_end,
                 f"scan.times_us: evaluation time {us_from_seconds(t):g} us "
                 f"outside the reading window")
    channels = _channels_for(config, _READ_CHANNELS)
    params, quad, mode = config.params, config.quad, config.population_mode
    d = derive(params)
    jobs = [(params, d, quad, delta, schedule.t1, scan.times, channels, mode)
            for delta in scan.detunings]
    results = _pmap(_memory_delta, jobs, workers)
    outputs, failures = [], []
    for channel in channels:
        for i, t in enumerate(scan.times):
            name = f"{channel}_spectrum_{i:02d}.csv"
            values = []
            for j, (per_delta, err) in enumerate(results):
                if err:
                    values.append(float("nan"))
                    if channel == channels[0] and i == 0:
                        failures.append({"file": name, "index": j, "error": err})
                else:
                    values.append(per_delta[channel][i])
            values = _maybe_peak_normalize(np.asarray(values), normalize)
            rows = [(_fmt(khz_from_rad_per_s(delta)), _fmt(v), channel,
                     _fmt(us_from_seconds(t)))
                    for delta, v in zip(scan.detunings, values)]
            text = _csv("detuning_khz,value,channel,eval_time_us", rows)
            outputs.append(_write_text(os.path.join(out_dir, name), text))
    return outputs, failures


def _run_memory_profile(config, out_dir, normalize, workers):
    scan, schedule = config.scan, config.schedule
    _require(schedule is not None, "schedule: required for memory commands")
    _require(scan.profile_times is not None,
             "scan.t_start_us/t_end_us/t_step_us: required")
    _require(len(scan.delta_list) > 0, "scan.delta_list_khz: required")
    times = scan.profile_times
    _require(float(times[0]) >= schedule.t1,
             "scan.t_start_us: profile must start at or after the write end")
    _require(float(times[-1]) <= schedule.t_read_end,
             "scan.t_end_us: profile must end inside the reading window")
    channels = _channels_for(config, _READ_CHANNELS)
    params, quad, mode = config.params, config.quad, config.population_mode
    d = derive(params)
    jobs = [(params, d, quad, delta, schedule.t1, schedule.t2,
             tuple(float(t) for t in times), channels, mode)
            for delta in scan.delta_list]
    results = _pmap(_memory_profile_delta, jobs, workers)
    outputs, failures = [], []
    for channel in channels:
        for i, delta in enumerate(scan.delta_list):
            per_delta, err = results[i]
            name = f"{channel}_profile_{i:02d}.csv"
            if err:
                failures.append({"file": name, "index": None, "error": err})
                vals = np.full(times.size, float("nan"))
            else:
                vals = np.asarray(per_delta[channel], dtype=float)
            vals = _maybe_peak_normalize(vals, normalize)
            rows = [(_fmt(us_from_seconds(t)), _fmt(v), channel,
                     _fmt(khz_from_rad_per_s(delta)))
                    for t, v in zip(times, vals)]
            text = _csv("time_us,value,channel,detuning_khz", rows)
            outputs.append(_write_text(os.path.join(out_dir, name), text))
    return outputs, failures


def _run_oracle_check(config, out_dir, normalize, workers):
    scan = config.scan
    delta = scan.delta_list[0] if scan.delta_list else 2.0 * math.pi * 4.0e3
    write_time = scan.times[0] if scan.times else 100.0e-6
    read_time = scan.times[1] if len(scan.times) > 1 else None
    params = config.params
    d = derive(params)
    report = oracle.oracle_report(
        params, d, delta=delta, write_time=write_time, read_time=read_time,
        num_samples=config.oracle.num_samples,
        max_kicks=config.oracle.max_kicks,
        halfwidth=config.quad.momentum_halfwidth,
        dt_safety=config.oracle.dt_safety,
    )
    text = json.dumps(report, sort_keys=True, indent=2) + "\n"
    out = _write_text(os.path.join(out_dir, "oracle_report.json"), text)
    out["rows"] = 0
    return [out], []


def _run_linewidth_evolution(config, out_dir, normalize, workers):
    scan, schedule = config.scan, config.schedule
    _require(len(scan.times) > 0, "scan.times_us: required")
    channels = config.scan.channels or _WRITE_CHANNELS
    for ch in channels:
        _require(ch in _WRITE_CHANNELS + _READ_CHANNELS,
                 f"scan.channels: unknown channel {ch!r}")
        if ch in _READ_CHANNELS:
            _require(schedule is not None,
                     "schedule: required for retrieved channels")
    params, quad, mode = config.params, config.quad, config.population_mode
    d = derive(params)
    jobs = [(params, d, quad, ch, scan.times, schedule, mode)
            for ch in channels]
    results = _pmap(_linewidth_channel, jobs, workers)
    outputs, failures = [], []
    for ch, (rows_or_none, err) in zip(channels, results):
        name = f"linewidth_{ch}.csv"
        metric = analysis.metric_for_channel(ch)
        if err:
            failures.append({"file": name, "index": None, "error": err})
            rows_or_none = []
        rows = []
        for t, rep in rows_or_none:
            width = float("nan") if rep is None else khz_from_rad_per_s(rep.width)
            rows.append((_fmt(us_from_seconds(t)), _fmt(width), metric, ch))
        text = _csv("time_us,width_khz,metric,channel", rows)
        outputs.append(_write_text(os.path.join(out_dir, name), text))
    return outputs, failures


def _run_thermometry(config, out_dir, normalize, workers):
    temps = config.scan.temperatures_uk or (125.0, 500.0, 1000.0)
    jobs = [(config.params, config.quad, t, config.population_mode)
            for t in temps]
    results = _pmap(_thermometry_case, jobs, workers)
    rows, failures = [], []
    for temp, (case_rows, err) in zip(temps, results):
        if err:
            failures.append({"file": "thermometry.csv", "index": None,
                             "error": err})
            continue
        for channel, metric, width, recovered in case_rows:
            rows.append((_fmt(temp), channel, metric,
                         _fmt(khz_from_rad_per_s(width)),
                         _fmt(recovered / 1.0e-6)))
    text = _csv("temperature_uk,channel,metric,width_khz,recovered_temperature_uk",
                rows)
    outputs = [_write_text(os.path.join(out_dir, "thermometry.csv"), text)]
    return outputs, failures


_EXECUTORS = {
    "write-spectrum": _run_write_spectrum,
    "write-profile": _run_write_profile,
    "memory-spectrum": _run_memory_spectrum,
    "memory-profile": _run_memory_profile,
    "oracle-check": _run_oracle_check,
    "linewidth-evolution": _run_linewidth_evolution,
    "thermometry": _run_thermometry,
}


def run(config: ExperimentConfig, command: str | None = None, *,
        out_dir: str | None = None, normalize: bool = False,
        workers: int = 1) -> RunManifest:
    """Execute one command against a parsed config.

    command falls back to the config's own `command` key (presets carry
    one).  out_dir overrides output.directory; normalize switches values to
    peak normalization; workers > 1 parallelizes over grid points with
    byte-identical output.
    """
    effective = command or config.command
    if effective is None:
        raise ValidationError(
            "config.command: no command given on the command line or in the file"
        )
    if effective not in _EXECUTORS:
        raise ValidationError(f"config.command: unknown command {effective!r}")
    directory = out_dir or config.output.directory
    os.makedirs(directory, exist_ok=True)
    do_normalize = normalize or config.output.normalization == NORMALIZATION_PEAK
    outputs, failures = _EXECUTORS[effective](config, directory, do_normalize,
                                              max(1, int(workers)))
    d = derive(config.params)
    manifest = RunManifest(
        command=effective,
        config_sha256=config_sha256(config),
        tool_version=__version__,
        derived={
            "p_u": d.p_u,
            "delta_k": d.delta_k,
            "recoil_shift": d.recoil_shift,
            "doppler_width": d.doppler_width,
            "tau_stationary": d.tau_stationary,
            "omega_eff": d.omega_eff,
        },
        outputs=tuple(outputs),
        failures=tuple(failures),
        status="partial" if failures else "ok",
    )
    with open(os.path.join(directory, "manifest.json"), "w",
              encoding="utf-8", newline="\n") as fh:
        fh.write(manifest.to_json())
    return manifest
