"""Spectral metrology: peak finding, width extraction, width-vs-time curves,
stationarity detection, and temperature inversion.

Width conventions
-----------------
The dispersive transmission channel is measured by the frequency separation
between its gain and absorption extrema.  The single-lobed intensity
channels (ffwm, retrieved_*) are measured by full width at half maximum.
Peak positions use 3-point parabolic interpolation; half-max crossings use
linear interpolation on each flank.  Both schemes are deliberately the
coarsest ones that meet the regression tolerances, so frozen constants stay
stable against refactoring.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .kernels import QuadratureSpec
from .params import BOLTZMANN_KB, HBAR, DerivedParams, PhysicalParams
from .writing import (
    CHANNEL_FFWM,
    CHANNEL_TRANSMISSION,
    Spectrum,
    TimeProfile,
    ffwm_spectrum,
    transmission_spectrum,
)
from .memory import CHANNEL_RETRIEVED_FFWM, CHANNEL_RETRIEVED_PROBE, PhaseSchedule
from . import memory as _memory

__all__ = [
    "DegenerateSpectrum",
    "NonStationaryInput",
    "NotConverged",
    "METRIC_SEPARATION",
    "METRIC_FWHM",
    "WidthReport",
    "metric_for_channel",
    "gain_absorption_separation",
    "fwhm",
    "width_of",
    "linewidth_evolution",
    "temperature_from_separation",
    "detect_stationarity",
]

METRIC_SEPARATION = "gain_absorption_separation"
METRIC_FWHM = "fwhm"

_INTENSITY_CHANNELS = (CHANNEL_FFWM, CHANNEL_RETRIEVED_PROBE,
                       CHANNEL_RETRIEVED_FFWM)


class DegenerateSpectrum(ValueError):
    """The requested width is not resolvable on the supplied grid."""


class NonStationaryInput(ValueError):
    """Thermometry was fed a width that has not reached its stationary value."""


class NotConverged(ValueError):
    """The profile never settles within tolerance inside its window."""


@dataclass(frozen=True)
class WidthReport:
    """One extracted linewidth.

    metric        : METRIC_SEPARATION or METRIC_FWHM
    width         : rad/s
    peak_location : rad/s, position of the (gain) peak
    peak_value    : signal value at the interpolated peak
    interpolated  : False when a flat top forced a raw grid-point fallback
    """

    metric: str
    width: float
    peak_location: float
    peak_value: float
    interpolated: bool


def metric_for_channel(channel: str) -> str:
    if channel == CHANNEL_TRANSMISSION:
        return METRIC_SEPARATION
    if channel in _INTENSITY_CHANNELS:
        return METRIC_FWHM
    raise ValueError(f"no width metric defined for channel {channel!r}")


def _parabolic_vertex(x: np.ndarray, y: np.ndarray, i: int):
    """Sub-grid extremum through (x[i-1..i+1], y[i-1..i+1]).

    Works in local coordinates u = x - x[i] so that axis shifts and value
    rescalings reproduce bit-near-identical results.  Returns
    (location, value, interpolated).
    """
    hl = x[i - 1] - x[i]
    hr = x[i + 1] - x[i]
    dl = y[i - 1] - y[i]
    dr = y[i + 1] - y[i]
    denom = hl * hr * (hl - hr)
    a = (dl * hr - dr * hl) / denom
    b = (dr * hl * hl - dl * hr * hr) / denom
    if a == 0.0:
        return float(x[i]), float(y[i]), False
    u = -b / (2.0 * a)
    return float(x[i] + u), float(y[i] - b * b / (4.0 * a)), True


def gain_absorption_separation(spectrum: Spectrum) -> WidthReport:
    """Frequency separation between the global maximum and global minimum of
    a dispersive spectrum, each refined by parabolic interpolation.

    Raises DegenerateSpectrum when either extremum sits on a grid boundary
    (constant spectra land here too: argmax/argmin then both return 0).
    """
    if spectrum.channel != CHANNEL_TRANSMISSION:
        raise ValueError(
            f"separation metric applies to the transmission channel, "
            f"got {spectrum.channel!r}"
        )
    x = spectrum.detunings
    y = spectrum.values
    i_max = int(np.argmax(y))
    i_min = int(np.argmin(y))
    last = x.size - 1
    if i_max in (0, last) or i_min in (0, last):
        raise DegenerateSpectrum(
            "gain/absorption extremum at a grid boundary; widen the "
            "detuning grid"
        )
    loc_max, val_max, ok_max = _parabolic_vertex(x, y, i_max)
    loc_min, _val_min, ok_min = _parabolic_vertex(x, y, i_min)
    return WidthReport(
        metric=METRIC_SEPARATION,
        width=abs(loc_max - loc_min),
        peak_location=loc_max,
        peak_value=val_max,
        interpolated=ok_max and ok_min,
    )


def _cross_half(x, y, j: int, half: float) -> float:
    """Linear interpolation of the half-max crossing between j and j+1."""
    return float(x[j] + (half - y[j]) * (x[j + 1] - x[j]) / (y[j + 1] - y[j]))


def fwhm(spectrum: Spectrum) -> WidthReport:
    """Full width at half maximum of a single-lobed nonnegative spectrum.

    The threshold is half the parabolically refined peak value; each flank
    crossing is located by linear interpolation.  Raises DegenerateSpectrum
    when the peak touches a boundary, when a flank never crosses half-max
    inside the grid, or when fewer than 3 samples exceed the threshold
    (a single-point spike carries no resolvable width).
    """
    if spectrum.channel not in _INTENSITY_CHANNELS:
        raise ValueError(
            f"fwhm applies to the single-lobed intensity channels, "
            f"got {spectrum.channel!r}"
        )
    x = spectrum.detunings
    y = spectrum.values
    if np.min(y) < 0.0:
        raise ValueError("fwhm expects nonnegative values")
    i_max = int(np.argmax(y))
    if i_max in (0, x.size - 1):
        raise DegenerateSpectrum("peak at a grid boundary")
    loc, val, interp = _parabolic_vertex(x, y, i_max)
    half = 0.5 * val
    if int(np.sum(y > half)) < 3:
        raise DegenerateSpectrum(
            "fewer than 3 samples above half maximum; peak unresolved"
        )
    j = i_max
    while j > 0 and y[j - 1] > half:
        j -= 1
    if j == 0:
        raise DegenerateSpectrum("left flank never crosses half maximum")
    left = _cross_half(x, y, j - 1, half)
    k = i_max
    while k < x.size - 1 and y[k + 1] > half:
        k += 1
    if k == x.size - 1:
        raise DegenerateSpectrum("right flank never crosses half maximum")
    right = _cross_half(x, y, k, half)
    return WidthReport(
        metric=METRIC_FWHM,
        width=right - left,
        peak_location=loc,
        peak_value=val,
        interpolated=interp,
    )


def width_of(spectrum: Spectrum) -> WidthReport:
    """Channel-appropriate width: separation for transmission, FWHM else."""
    if metric_for_channel(spectrum.channel) == METRIC_SEPARATION:
        return gain_absorption_separation(spectrum)
    return fwhm(spectrum)


def _auto_delta_grid(derived: DerivedParams, horizon: float,
                     num_deltas: int) -> np.ndarray:
    """Detuning grid wide enough for thermal and transform-limited widths.

    The transform-limited extent scales like 1/horizon, the thermal extent
    like the Doppler width; the sum covers both regimes with margin.
    """
    halfwidth = 6.0 * derived.doppler_width + 16.0 / horizon
    return np.linspace(-halfwidth, halfwidth, num_deltas)


def linewidth_evolution(params: PhysicalParams, derived: DerivedParams,
                        quad: QuadratureSpec, channel: str, t_grid, *,
                        schedule: PhaseSchedule | None = None,
                        delta_grid=None, num_deltas: int = 801,
                        mode: str = "gaussian_derivative"):
    """Width of the chosen channel's spectrum at each time in t_grid.

    Returns a list of (t, WidthReport or None) pairs; a None marks a time
    where the width was degenerate on the grid (kept as an explicit gap,
    never dropped).  Retrieved channels require a schedule and absolute
    evaluation times inside the reading window.
    """
    retrieved = channel in (CHANNEL_RETRIEVED_PROBE, CHANNEL_RETRIEVED_FFWM)
    if retrieved and schedule is None:
        raise ValueError("retrieved channels need a schedule")
    rows = []
    for t in np.atleast_1d(np.asarray(t_grid, dtype=float)):
        t = float(t)
        horizon = schedule.t1 if retrieved else t
        grid = (np.asarray(delta_grid, dtype=float) if delta_grid is not None
                else _auto_delta_grid(derived, horizon, num_deltas))
        if retrieved:
            spec = _memory.retrieved_spectrum(params, derived, quad, grid,
                                              schedule, t, channel, mode=mode)
        elif channel == CHANNEL_TRANSMISSION:
            spec = transmission_spectrum(params, derived, quad, grid, t,
                                         mode=mode)
        elif channel == CHANNEL_FFWM:
            spec = ffwm_spectrum(params, derived, quad, grid, t, mode=mode)
        else:
            raise ValueError(f"unknown channel {channel!r}")
        try:
            rows.append((t, width_of(spec)))
        except DegenerateSpectrum:
            rows.append((t, None))
    return rows


def temperature_from_separation(separation: float, derived: DerivedParams,
                                *, metric: str = METRIC_SEPARATION,
                                stationary: bool = True) -> float:
    """Invert a stationary linewidth to the ensemble temperature.

    For the separation metric the width equals 2 * delta_k * p_u / mass
    exactly in the stationary limit.  For the FWHM metric the stationary
    intensity lineshape is universal once frequencies are scaled by the
    Doppler width, so a single calibrated ratio (generated constants file,
    see scripts/calibrate_ffwm_width.py) converts FWHM to Doppler width.

    The mass never appears in DerivedParams directly but is recoverable
    from the recoil shift, mass = hbar * delta_k**2 / (2 * recoil_shift).
    """
    if not stationary:
        raise NonStationaryInput(
            "width has not converged; thermometry needs the stationary value"
        )
    if not (separation > 0.0) or not math.isfinite(separation):
        raise ValueError(f"separation: must be finite and > 0, got {separation!r}")
    mass = HBAR * derived.delta_k**2 / (2.0 * derived.recoil_shift)
    if metric == METRIC_SEPARATION:
        p_u = separation * mass / (2.0 * derived.delta_k)
    elif metric == METRIC_FWHM:
        from ._ffwm_width import FFWM_FWHM_OVER_DOPPLER_WIDTH
        doppler = separation / FFWM_FWHM_OVER_DOPPLER_WIDTH
        p_u = doppler * mass / derived.delta_k
    else:
        raise ValueError(f"unknown metric {metric!r}")
    return p_u**2 / (mass * BOLTZMANN_KB)


def detect_stationarity(profile: TimeProfile, rel_tol: float = 1e-2) -> float:
    """Earliest time after which the profile stays within rel_tol of its
    final value.

    The tolerance is relative to |final value|.  To avoid declaring victory
    on the last few samples of an undamped oscillation, the converged tail
    must span at least a quarter of the profile window; otherwise
    NotConverged is raised.  A constant profile settles at its first sample.
    """
    if not (rel_tol >= 0.0):
        raise ValueError(f"rel_tol: must be >= 0, got {rel_tol!r}")
    t = profile.times
    v = profile.values
    final = float(v[-1])
    tol = rel_tol * abs(final)
    ok = np.abs(v - final) <= tol
    bad = np.flatnonzero(~ok)
    first_settled = 0 if bad.size == 0 else int(bad[-1]) + 1
    if first_settled == 0:
        return float(t[0])
    window = float(t[-1] - t[0])
    tail = float(t[-1] - t[first_settled])
    if tail < 0.25 * window:
        raise NotConverged(
            f"profile still moving at the end of the window: converged tail "
            f"covers {tail:.3e} s of {window:.3e} s"
        )
    return float(t[first_settled])
