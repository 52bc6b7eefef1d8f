"""Physical parameters and derived scales for recoil-induced-resonance (RIR) runs.

All internal quantities are SI with angular frequencies in rad/s.  The
conversion helpers at the bottom of the module are the only place where
interface units (kHz, MHz, microseconds, microkelvin, degrees) are mapped
onto the internal ones, so numerical code never multiplies by 2*pi ad hoc.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

__all__ = [
    "ValidationError",
    "PhysicalParams",
    "DerivedParams",
    "derive",
    "cesium_params",
    "BOLTZMANN_KB",
    "HBAR",
    "ATOMIC_MASS_KG",
    "rad_per_s_from_khz",
    "khz_from_rad_per_s",
    "rad_per_s_from_mhz",
    "seconds_from_us",
    "us_from_seconds",
    "kelvin_from_uk",
    "radians_from_degrees",
]

# CODATA 2018 values.
BOLTZMANN_KB = 1.380649e-23     # J/K
HBAR = 1.054571817e-34          # J*s
ATOMIC_MASS_KG = 1.66053906660e-27  # kg per atomic mass unit


class ValidationError(ValueError):
    """Raised when a parameter set violates a model precondition."""


@dataclass(frozen=True)
class PhysicalParams:
    """Inputs defining one pump-probe configuration.

    temperature : K, kinetic temperature of the gas
    theta       : rad, angle between pump and probe wavevectors
    wavelength  : m, optical wavelength of the pump
    mass        : kg, atomic mass
    delta_e     : rad/s, detuning of the pump from the excited state
    omega_e     : rad/s, pump Rabi frequency
    omega_p     : rad/s, probe Rabi frequency
    gamma       : rad/s, natural linewidth of the excited state (used only
                  to police the adiabatic-elimination regime, never in the
                  signal formulas)
    validity_factor : dimensionless, required ratio |delta_e| / gamma
    """

    temperature: float
    theta: float
    wavelength: float
    mass: float
    delta_e: float
    omega_e: float
    omega_p: float
    gamma: float
    validity_factor: float = 10.0

    def __post_init__(self):
        positive = [
            ("temperature", self.temperature),
            ("wavelength", self.wavelength),
            ("mass", self.mass),
            ("omega_e", self.omega_e),
            ("omega_p", self.omega_p),
            ("gamma", self.gamma),
            ("validity_factor", self.validity_factor),
        ]
        for name, value in positive:
            if not (isinstance(value, (int, float)) and math.isfinite(value)):
                raise ValidationError(f"{name}: must be a finite number, got {value!r}")
            if value <= 0.0:
                raise ValidationError(f"{name}: must be > 0, got {value!r}")
        if not math.isfinite(self.delta_e) or self.delta_e == 0.0:
            raise ValidationError(f"delta_e: must be finite and nonzero, got {self.delta_e!r}")
        if not (isinstance(self.theta, (int, float)) and math.isfinite(self.theta)):
            raise ValidationError(f"theta: must be a finite number, got {self.theta!r}")
        if not (0.0 <= self.theta < math.pi):
            raise ValidationError(f"theta: must lie in [0, pi) rad, got {self.theta!r}")
        # Adiabatic elimination of the excited state needs a far-detuned pump.
        if abs(self.delta_e) < self.validity_factor * self.gamma:
            raise ValidationError(
                "delta_e: |delta_e| = {:.4g} rad/s is below validity_factor * gamma "
                "= {:.4g} rad/s; excited-state elimination is not trustworthy".format(
                    abs(self.delta_e), self.validity_factor * self.gamma
                )
            )
        # The whole treatment is perturbative in the probe.
        if self.omega_p >= self.omega_e:
            raise ValidationError(
                f"omega_p: probe Rabi frequency {self.omega_p:.4g} rad/s must stay "
                f"below the pump Rabi frequency ({self.omega_e:.4g} rad/s)"
            )


@dataclass(frozen=True)
class DerivedParams:
    """Scales computed once from :class:`PhysicalParams`.

    p_u            : kg*m/s, thermal momentum sqrt(m kB T)
    delta_k        : 1/m, magnitude of the two-photon momentum kick / hbar
    recoil_shift   : rad/s, hbar delta_k^2 / (2 m)
    doppler_width  : rad/s, delta_k p_u / m
    tau_stationary : s, 2*pi / doppler_width; dephasing time after which
                     spectra stop evolving
    omega_eff      : rad/s, two-photon Rabi frequency omega_e*omega_p/delta_e
    """

    p_u: float
    delta_k: float
    recoil_shift: float
    doppler_width: float
    tau_stationary: float
    omega_eff: float


def derive(params: PhysicalParams) -> DerivedParams:
    """Compute the derived scales for a parameter set."""
    p_u = math.sqrt(params.mass * BOLTZMANN_KB * params.temperature)
    k = 2.0 * math.pi / params.wavelength
    delta_k = 2.0 * k * math.sin(0.5 * params.theta)
    recoil_shift = HBAR * delta_k**2 / (2.0 * params.mass)
    doppler_width = delta_k * p_u / params.mass
    # Collinear beams (theta = 0) exchange no transverse momentum; every
    # derived frequency scale collapses and the dephasing time diverges.
    tau_stationary = math.inf if doppler_width == 0.0 else 2.0 * math.pi / doppler_width
    omega_eff = params.omega_e * params.omega_p / params.delta_e
    return DerivedParams(
        p_u=p_u,
        delta_k=delta_k,
        recoil_shift=recoil_shift,
        doppler_width=doppler_width,
        tau_stationary=tau_stationary,
        omega_eff=omega_eff,
    )


def cesium_params(
    temperature_uk: float = 500.0,
    theta_deg: float = 1.0,
    *,
    delta_e_mhz: float = 200.0,
    omega_e_khz: float = 50.0,
    omega_p_khz: float = 5.0,
    wavelength_nm: float = 852.3,
    validity_factor: float = 10.0,
) -> PhysicalParams:
    """Cold-cesium defaults: D2 line at 852.3 nm, mass 132.905 u.

    The default pump detuning is chosen comfortably outside the natural
    linewidth so the far-detuned validity check passes; detuning and Rabi
    frequencies only set the global signal scale, never the lineshapes.
    """
    return PhysicalParams(
        temperature=kelvin_from_uk(temperature_uk),
        theta=radians_from_degrees(theta_deg),
        wavelength=wavelength_nm * 1.0e-9,
        mass=132.905 * ATOMIC_MASS_KG,
        delta_e=rad_per_s_from_mhz(delta_e_mhz),
        omega_e=rad_per_s_from_khz(omega_e_khz),
        omega_p=rad_per_s_from_khz(omega_p_khz),
        gamma=rad_per_s_from_mhz(5.22),  # Cs D2 natural linewidth
        validity_factor=validity_factor,
    )


# ---------------------------------------------------------------------------
# interface-unit conversions

def rad_per_s_from_khz(value: float) -> float:
    return 2.0 * math.pi * 1.0e3 * value


def khz_from_rad_per_s(value: float) -> float:
    return value / (2.0 * math.pi * 1.0e3)


def rad_per_s_from_mhz(value: float) -> float:
    return 2.0 * math.pi * 1.0e6 * value


def seconds_from_us(value: float) -> float:
    return 1.0e-6 * value


def us_from_seconds(value: float) -> float:
    return 1.0e6 * value


def kelvin_from_uk(value: float) -> float:
    return 1.0e-6 * value


def radians_from_degrees(value: float) -> float:
    return math.radians(value)
