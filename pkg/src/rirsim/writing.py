"""Writing-phase observables: probe transmission and forward four-wave mixing.

Both signals come from the same first-order momentum-space response.  A
pump/probe pair detuned by ``delta`` drives Raman transitions between
momentum classes separated by one photon kick ``hbar*delta_k``; the induced
coherence between those classes radiates either back into the probe mode
(transmission change, detected in quadrature, so the observable is an
imaginary part) or into the phase-matched four-wave-mixing mode (detected in
intensity, so the observable is a modulus squared).

The momentum integral for a class pair whose two-photon resonance sits at
detuning ``phi`` away from the drive is ``phase_diff_kernel(phi, t)`` times
the thermal population difference of the pair.  Two forms of that
difference are supported:

* ``gaussian_derivative`` (default): the population difference is replaced
  by its first-order Taylor form p * exp(-p^2 / 2 p_u^2).  This is the
  conventional lineshape; it makes the transmission spectrum exactly
  antisymmetric about delta = recoil_shift and the four-wave-mixing
  spectrum exactly symmetric about delta = -recoil_shift.
* ``exact_shift``: the difference of the two displaced Gaussians is kept.
  The two modes differ by O(hbar*delta_k / p_u), about 2e-4 at cold-gas
  defaults; the exact form is what the brute-force validator reproduces.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .kernels import (
    QuadratureSpec,
    integrate,
    phase_diff_kernel,
    resolved_num_points,
)
from .params import HBAR, DerivedParams, PhysicalParams

__all__ = [
    "CHANNEL_TRANSMISSION",
    "CHANNEL_FFWM",
    "SPECTRUM_CHANNELS",
    "PROFILE_CHANNELS",
    "POPULATION_MODES",
    "NORMALIZATION_PHYSICAL",
    "NORMALIZATION_PEAK",
    "Spectrum",
    "TimeProfile",
    "probe_kernel_argument",
    "ffwm_kernel_argument",
    "population_difference_weight",
    "transmission_prefactor",
    "ffwm_prefactor",
    "transmission_value",
    "ffwm_value",
    "transmission_spectrum",
    "ffwm_spectrum",
    "transmission_time_profile",
    "ffwm_time_profile",
    "single_group_profile",
]

CHANNEL_TRANSMISSION = "transmission"
CHANNEL_FFWM = "ffwm"

POPULATION_MODES = ("gaussian_derivative", "exact_shift")

NORMALIZATION_PHYSICAL = "physical_prefactor"
NORMALIZATION_PEAK = "peak_normalized"

# retrieved_* channels are defined in the memory module but share the record
# types; single_group is the per-velocity-class diagnostic profile.
SPECTRUM_CHANNELS = ("transmission", "ffwm", "retrieved_probe", "retrieved_ffwm")
PROFILE_CHANNELS = SPECTRUM_CHANNELS + ("single_group",)
_NORMALIZATIONS = (NORMALIZATION_PHYSICAL, NORMALIZATION_PEAK)


@dataclass(frozen=True)
class Spectrum:
    """Signal values on a detuning grid at one evaluation time.

    detunings in rad/s (strictly increasing), eval_time in s.
    """

    channel: str
    detunings: np.ndarray
    values: np.ndarray
    eval_time: float
    normalization: str = NORMALIZATION_PHYSICAL

    def __post_init__(self):
        if self.channel not in SPECTRUM_CHANNELS:
            raise ValueError(f"channel: unknown channel {self.channel!r}")
        if self.normalization not in _NORMALIZATIONS:
            raise ValueError(f"normalization: unknown mode {self.normalization!r}")
        d = np.asarray(self.detunings, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if d.ndim != 1 or d.size < 3:
            raise ValueError("detunings: need a 1-d grid with at least 3 points")
        if v.shape != d.shape:
            raise ValueError("values: shape must match detunings")
        if not np.all(np.diff(d) > 0):
            raise ValueError("detunings: must be strictly increasing")
        if not np.all(np.isfinite(v)):
            raise ValueError("values: must be finite")
        object.__setattr__(self, "detunings", d)
        object.__setattr__(self, "values", v)

    def peak_normalized(self) -> "Spectrum":
        scale = float(np.max(np.abs(self.values)))
        if scale == 0.0:
            raise ValueError("cannot peak-normalize an all-zero spectrum")
        return replace(self, values=self.values / scale,
                       normalization=NORMALIZATION_PEAK)


@dataclass(frozen=True)
class TimeProfile:
    """Signal values on a time grid at one detuning (times in s, >= 0)."""

    channel: str
    detuning: float
    times: np.ndarray
    values: np.ndarray
    normalization: str = NORMALIZATION_PHYSICAL

    def __post_init__(self):
        if self.channel not in PROFILE_CHANNELS:
            raise ValueError(f"channel: unknown channel {self.channel!r}")
        if self.normalization not in _NORMALIZATIONS:
            raise ValueError(f"normalization: unknown mode {self.normalization!r}")
        t = np.asarray(self.times, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if t.ndim != 1 or t.size < 2:
            raise ValueError("times: need a 1-d grid with at least 2 points")
        if v.shape != t.shape:
            raise ValueError("values: shape must match times")
        if not np.all(np.diff(t) > 0):
            raise ValueError("times: must be strictly increasing")
        if t[0] < 0.0:
            raise ValueError("times: must be nonnegative")
        if not np.all(np.isfinite(v)):
            raise ValueError("values: must be finite")
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "values", v)

    def peak_normalized(self) -> "TimeProfile":
        scale = float(np.max(np.abs(self.values)))
        if scale == 0.0:
            raise ValueError("cannot peak-normalize an all-zero profile")
        return replace(self, values=self.values / scale,
                       normalization=NORMALIZATION_PEAK)


# ---------------------------------------------------------------------------
# integrand pieces

def probe_kernel_argument(p, delta: float, derived: DerivedParams, mass: float):
    """Detuning of the drive from the p -> p - hbar*delta_k Raman resonance.

    phi_minus(p) = -delta - p*delta_k/m + recoil_shift.  The transmission
    kernel is phase_diff_kernel(phi_minus, t).
    """
    p = np.asarray(p, dtype=float)
    return -delta - p * derived.delta_k / mass + derived.recoil_shift


def ffwm_kernel_argument(p, delta: float, derived: DerivedParams, mass: float):
    """Same for the conjugate p -> p + hbar*delta_k process feeding the
    four-wave-mixing mode: phi_plus(p) = +delta + p*delta_k/m + recoil_shift."""
    p = np.asarray(p, dtype=float)
    return delta + p * derived.delta_k / mass + derived.recoil_shift


def population_difference_weight(p, derived: DerivedParams, kick_sign: int,
                                 mode: str = "gaussian_derivative"):
    """Thermal population difference between the two classes of a Raman pair.

    kick_sign = -1 pairs p with p - hbar*delta_k (transmission channel),
    kick_sign = +1 pairs p with p + hbar*delta_k (four-wave mixing).  Scaled
    so both modes reduce to p * exp(-p^2/2p_u^2) when the kick is small;
    the scale constant absorbs the channel's sign convention, fixed by the
    transmission formula (gain side at detunings above the recoil shift).
    """
    if mode not in POPULATION_MODES:
        raise ValueError(f"unknown population-difference mode {mode!r}")
    p = np.asarray(p, dtype=float)
    p_u = derived.p_u
    if mode == "gaussian_derivative":
        return p * np.exp(-0.5 * (p / p_u) ** 2)
    kick = HBAR * derived.delta_k
    shifted = p - kick if kick_sign < 0 else p + kick
    return (p_u * p_u / kick) * (
        np.exp(-0.5 * (shifted / p_u) ** 2) - np.exp(-0.5 * (p / p_u) ** 2)
    )


def transmission_prefactor(params: PhysicalParams, derived: DerivedParams) -> float:
    """Constant multiplying Im[integral] in the transmission channel."""
    return (
        derived.omega_eff * params.omega_e * params.mass * derived.delta_k
        / (params.delta_e * (2.0 * math.pi) ** 2 * math.sqrt(HBAR) * derived.p_u**2)
    )


def ffwm_prefactor(params: PhysicalParams, derived: DerivedParams) -> float:
    """Constant multiplying the complex integral in the four-wave-mixing
    channel (the reported signal is its modulus squared)."""
    return (
        derived.omega_eff * params.omega_e * HBAR * params.mass * derived.delta_k
        / (params.delta_e * (2.0 * math.pi * HBAR) ** 1.5 * derived.p_u**2)
    )


def _channel_integral(params: PhysicalParams, derived: DerivedParams,
                      quad: QuadratureSpec, delta: float, t: float,
                      kick_sign: int, mode: str) -> complex:
    """Momentum integral of kernel * population weight for one channel.

    The grid is automatically refined so the kernel's fastest momentum
    oscillation (rate delta_k/m * t) keeps >= 8 points per cycle.
    """
    if t < 0.0:
        raise ValueError(f"t: evaluation time must be >= 0, got {t!r}")
    phase_rate = derived.delta_k / params.mass * t
    n = resolved_num_points(quad, derived.p_u, phase_rate)

    def integrand(p):
        if kick_sign < 0:
            phi = probe_kernel_argument(p, delta, derived, params.mass)
        else:
            phi = ffwm_kernel_argument(p, delta, derived, params.mass)
        weight = population_difference_weight(p, derived, kick_sign, mode)
        return phase_diff_kernel(phi, t) * weight

    return integrate(integrand, quad, derived.p_u, num_points=n).value


def transmission_value(params: PhysicalParams, derived: DerivedParams,
                       quad: QuadratureSpec, delta: float, t: float,
                       mode: str = "gaussian_derivative") -> float:
    """Probe gain/absorption signal (quadrature detection) at one (delta, t)."""
    total = _channel_integral(params, derived, quad, delta, t, -1, mode)
    return transmission_prefactor(params, derived) * total.imag


def ffwm_value(params: PhysicalParams, derived: DerivedParams,
               quad: QuadratureSpec, delta: float, t: float,
               mode: str = "gaussian_derivative") -> float:
    """Forward four-wave-mixing intensity at one (delta, t)."""
    total = _channel_integral(params, derived, quad, delta, t, +1, mode)
    return abs(ffwm_prefactor(params, derived) * total) ** 2


def transmission_spectrum(params: PhysicalParams, derived: DerivedParams,
                          quad: QuadratureSpec, detunings, t: float,
                          mode: str = "gaussian_derivative") -> Spectrum:
    detunings = np.asarray(detunings, dtype=float)
    values = np.array([
        transmission_value(params, derived, quad, float(d), t, mode)
        for d in detunings
    ])
    return Spectrum(CHANNEL_TRANSMISSION, detunings, values, t)


def ffwm_spectrum(params: PhysicalParams, derived: DerivedParams,
                  quad: QuadratureSpec, detunings, t: float,
                  mode: str = "gaussian_derivative") -> Spectrum:
    detunings = np.asarray(detunings, dtype=float)
    values = np.array([
        ffwm_value(params, derived, quad, float(d), t, mode)
        for d in detunings
    ])
    return Spectrum(CHANNEL_FFWM, detunings, values, t)


def transmission_time_profile(params: PhysicalParams, derived: DerivedParams,
                         quad: QuadratureSpec, delta: float, times,
                         mode: str = "gaussian_derivative") -> TimeProfile:
    times = np.asarray(times, dtype=float)
    values = np.array([
        transmission_value(params, derived, quad, delta, float(t), mode)
        for t in times
    ])
    return TimeProfile(CHANNEL_TRANSMISSION, delta, times, values)


def ffwm_time_profile(params: PhysicalParams, derived: DerivedParams,
                 quad: QuadratureSpec, delta: float, times,
                 mode: str = "gaussian_derivative") -> TimeProfile:
    times = np.asarray(times, dtype=float)
    values = np.array([
        ffwm_value(params, derived, quad, delta, float(t), mode)
        for t in times
    ])
    return TimeProfile(CHANNEL_FFWM, delta, times, values)


def single_group_profile(params: PhysicalParams, derived: DerivedParams,
                         p_y: float, delta: float, times,
                         mode: str = "gaussian_derivative") -> TimeProfile:
    """Contribution of one momentum class to the transmission integrand vs t.

    Without the thermal average there is no dephasing: the result is an
    undamped oscillation at |phi_minus(p_y)| whose amplitude never decays.
    Useful as a diagnostic of why the ensemble signal reaches a stationary
    value (inhomogeneous interference) while each class does not.
    """
    times = np.asarray(times, dtype=float)
    phi = float(probe_kernel_argument(p_y, delta, derived, params.mass))
    weight = float(population_difference_weight(p_y, derived, -1, mode))
    pref = transmission_prefactor(params, derived)
    values = np.array([
        pref * phase_diff_kernel(phi, float(t)).imag * weight
        for t in times
    ])
    return TimeProfile("single_group", delta, times, values)
