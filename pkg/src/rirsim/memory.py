"""Storage and retrieval of the writing-phase momentum coherence.

Protocol: both beams drive the gas during [0, t1] (writing), everything is
off during [t1, t2] (dark storage), and only the strong beam is on from t2
(reading).  The information lives in coherences between momentum classes
one photon kick apart.  During storage and reading nothing couples those
classes any more, so each pair only accumulates its own kinetic phase; the
reading beam merely maps the still-evolving coherence back onto an optical
field.  Two consequences shape the API:

* non-volatility: the retrieved signal depends on the total elapsed time
  t - t1 and not on when the reading beam was switched on, so ``t2`` only
  enters as an observation-window bound, never in a formula;
* no signal in the dark: with both beams off the optical coherence is
  identically zero, which the runner reports as explicit zero rows.

Retrieved signals in both channels are detected in intensity, hence the
modulus squared.  At delta = 0 the probe-direction and four-wave-mixing
retrievals are mirror images of each other in momentum and their intensities
coincide.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .kernels import (
    NonFiniteIntegrand,
    QuadratureSpec,
    momentum_grid,
    phase_diff_kernel,
    resolved_num_points,
)
from .params import DerivedParams, PhysicalParams
from .writing import (
    TimeProfile,
    Spectrum,
    ffwm_kernel_argument,
    ffwm_prefactor,
    population_difference_weight,
    probe_kernel_argument,
)

__all__ = [
    "CHANNEL_RETRIEVED_PROBE",
    "CHANNEL_RETRIEVED_FFWM",
    "WindowError",
    "PhaseSchedule",
    "StoredCoherence",
    "stored_coherence",
    "dark_phase_coherence",
    "retrieved_probe_value",
    "retrieved_ffwm_value",
    "retrieved_spectrum",
    "retrieved_time_profile",
]

CHANNEL_RETRIEVED_PROBE = "retrieved_probe"
CHANNEL_RETRIEVED_FFWM = "retrieved_ffwm"


class WindowError(ValueError):
    """Requested evaluation time falls outside the phase it belongs to."""


@dataclass(frozen=True)
class PhaseSchedule:
    """Write / store / read switching times, in seconds.

    t1       : end of writing (write duration; writing starts at 0)
    t2       : start of reading
    t_read_end : end of the observation window
    """

    t1: float
    t2: float
    t_read_end: float

    def __post_init__(self):
        for name in ("t1", "t2", "t_read_end"):
            v = getattr(self, name)
            if not (isinstance(v, (int, float)) and np.isfinite(v)):
                raise ValueError(f"{name}: must be a finite number, got {v!r}")
        if not self.t1 > 0.0:
            raise ValueError(f"t1: write duration must be > 0, got {self.t1!r}")
        if self.t2 < self.t1:
            raise ValueError(
                f"t2: reading cannot start before writing ends ({self.t2!r} < {self.t1!r})"
            )
        if self.t_read_end < self.t2:
            raise ValueError(
                f"t_read_end: must be >= t2, got {self.t_read_end!r} < {self.t2!r}"
            )


@dataclass(frozen=True)
class StoredCoherence:
    """Momentum-resolved coherence left by a write of duration t1.

    momenta/weights     : quadrature grid used for later retrieval integrals
    probe_amplitudes    : coherence array for the probe-direction channel
    ffwm_amplitudes     : same for the four-wave-mixing channel
    probe_phase_rates   : rad/s kinetic evolution rate of each probe pair
    ffwm_phase_rates    : same for the conjugate pairs
    prefactor           : common physical scale applied to both retrieved
                          intensities (identical so the channels stay
                          comparable)
    """

    delta: float
    t1: float
    mode: str
    momenta: np.ndarray
    weights: np.ndarray
    probe_amplitudes: np.ndarray
    ffwm_amplitudes: np.ndarray
    probe_phase_rates: np.ndarray
    ffwm_phase_rates: np.ndarray
    prefactor: float


def stored_coherence(params: PhysicalParams, derived: DerivedParams,
                     quad: QuadratureSpec, delta: float, t1: float,
                     mode: str = "gaussian_derivative",
                     resolve_until: float | None = None) -> StoredCoherence:
    """Coherence arrays at the end of a write of duration t1.

    resolve_until: latest retrieval time the arrays will be used for; the
    grid is refined so the retrieval phase factors stay resolved out to it.
    """
    if not (math.isfinite(t1) and t1 >= 0.0):
        raise ValueError(f"t1: write duration must be >= 0, got {t1!r}")
    horizon = t1 if resolve_until is None else max(t1, resolve_until)
    phase_rate = derived.delta_k / params.mass * horizon
    n = resolved_num_points(quad, derived.p_u, phase_rate)
    p, w = momentum_grid(quad, derived.p_u, n)

    phi_minus = probe_kernel_argument(p, delta, derived, params.mass)
    phi_plus = ffwm_kernel_argument(p, delta, derived, params.mass)
    # Kinetic two-photon detunings of the stored pairs; the drive detuning
    # delta drops out once the beams are off.
    rate_minus = phi_minus + delta
    rate_plus = phi_plus - delta

    probe_amp = (
        np.exp(1j * delta * t1)
        * phase_diff_kernel(phi_minus, t1)
        * population_difference_weight(p, derived, -1, mode)
    )
    ffwm_amp = (
        np.exp(-1j * delta * t1)
        * phase_diff_kernel(phi_plus, t1)
        * population_difference_weight(p, derived, +1, mode)
    )
    for name, arr in (("probe", probe_amp), ("ffwm", ffwm_amp)):
        bad = ~np.isfinite(arr)
        if bad.any():
            raise NonFiniteIntegrand(
                f"stored {name} coherence not finite at {int(bad.sum())} samples",
                p[bad],
            )
    return StoredCoherence(
        delta=delta,
        t1=t1,
        mode=mode,
        momenta=p,
        weights=w,
        probe_amplitudes=probe_amp,
        ffwm_amplitudes=ffwm_amp,
        probe_phase_rates=rate_minus,
        ffwm_phase_rates=rate_plus,
        prefactor=ffwm_prefactor(params, derived),
    )


def dark_phase_coherence(delta: float, t: float) -> complex:
    """Optical coherence during dark storage: identically zero.

    With both beams off nothing maps the stored momentum coherence onto the
    optical dipole, so no field is emitted regardless of delta or t.
    """
    return 0.0j


def _retrieved(stored: StoredCoherence, t: float, amplitudes: np.ndarray,
               rates: np.ndarray) -> float:
    if t < stored.t1:
        raise WindowError(
            f"t: retrieval is defined from the end of writing (t >= {stored.t1!r}), got {t!r}"
        )
    phases = np.exp(1j * rates * (t - stored.t1))
    total = np.sum(stored.weights * phases * amplitudes)
    return abs(stored.prefactor * total) ** 2


def retrieved_probe_value(stored: StoredCoherence, t: float) -> float:
    """Probe-direction retrieved intensity at absolute time t >= t1.

    Depends on t only through t - t1: when the reading beam was switched on
    does not matter (non-volatile storage).
    """
    return _retrieved(stored, t, stored.probe_amplitudes, stored.probe_phase_rates)


def retrieved_ffwm_value(stored: StoredCoherence, t: float) -> float:
    """Four-wave-mixing retrieved intensity at absolute time t >= t1."""
    return _retrieved(stored, t, stored.ffwm_amplitudes, stored.ffwm_phase_rates)


def _check_window(schedule: PhaseSchedule, times) -> None:
    times = np.atleast_1d(np.asarray(times, dtype=float))
    bad = (times < schedule.t2) | (times > schedule.t_read_end)
    if bad.any():
        raise WindowError(
            "evaluation times must lie in the reading window "
            f"[{schedule.t2!r}, {schedule.t_read_end!r}]; offending: {times[bad][:5]}"
        )


def retrieved_spectrum(params: PhysicalParams, derived: DerivedParams,
                       quad: QuadratureSpec, detunings, schedule: PhaseSchedule,
                       t: float, channel: str = CHANNEL_RETRIEVED_PROBE,
                       mode: str = "gaussian_derivative") -> Spectrum:
    """Retrieved intensity vs write detuning, observed at time t in the
    reading window."""
    _check_window(schedule, t)
    detunings = np.asarray(detunings, dtype=float)
    values = np.empty_like(detunings)
    for i, d in enumerate(detunings):
        stored = stored_coherence(params, derived, quad, float(d), schedule.t1,
                                  mode, resolve_until=t)
        if channel == CHANNEL_RETRIEVED_PROBE:
            values[i] = retrieved_probe_value(stored, t)
        elif channel == CHANNEL_RETRIEVED_FFWM:
            values[i] = retrieved_ffwm_value(stored, t)
        else:
            raise ValueError(f"unknown retrieved channel {channel!r}")
    return Spectrum(channel, detunings, values, t)


def retrieved_time_profile(params: PhysicalParams, derived: DerivedParams,
                      quad: QuadratureSpec, delta: float, schedule: PhaseSchedule,
                      times, channel: str = CHANNEL_RETRIEVED_PROBE,
                      mode: str = "gaussian_derivative") -> TimeProfile:
    """Retrieved intensity vs observation time inside the reading window."""
    _check_window(schedule, times)
    times = np.asarray(times, dtype=float)
    stored = stored_coherence(params, derived, quad, delta, schedule.t1, mode,
                              resolve_until=float(times[-1]))
    if channel == CHANNEL_RETRIEVED_PROBE:
        values = np.array([retrieved_probe_value(stored, float(t)) for t in times])
    elif channel == CHANNEL_RETRIEVED_FFWM:
        values = np.array([retrieved_ffwm_value(stored, float(t)) for t in times])
    else:
        raise ValueError(f"unknown retrieved channel {channel!r}")
    return TimeProfile(channel, delta, times, values)
