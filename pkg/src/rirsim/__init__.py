"""Simulator of recoil-induced resonances and the RIR-based atomic memory.

Momentum-space model of cold two-level atoms driven by a pump/probe pair:
writing-phase probe transmission and forward four-wave-mixing spectra, dark
storage, and reading-phase retrieval, each from closed first-order momentum
integrals, plus a brute-force ladder integrator that validates them.
"""

from ._version import __version__
from . import analysis, config, kernels, memory, oracle, params, runner, writing
from .analysis import (
    DegenerateSpectrum,
    NonStationaryInput,
    NotConverged,
    WidthReport,
    detect_stationarity,
    fwhm,
    gain_absorption_separation,
    linewidth_evolution,
    temperature_from_separation,
)
from .config import ExperimentConfig, ParseError, load_config, parse_config
from .kernels import (
    NonFiniteIntegrand,
    QuadratureSpec,
    integrate,
    maxwell_1d,
    phase_diff_kernel,
)
from .memory import (
    PhaseSchedule,
    StoredCoherence,
    WindowError,
    dark_phase_coherence,
    retrieved_ffwm_value,
    retrieved_probe_value,
    retrieved_spectrum,
    retrieved_time_profile,
    stored_coherence,
)
from .oracle import LadderState, StabilityError, init_ladder, oracle_report, step
from .params import (
    DerivedParams,
    PhysicalParams,
    ValidationError,
    cesium_params,
    derive,
)
from .runner import RunManifest, run
from .writing import (
    Spectrum,
    TimeProfile,
    ffwm_spectrum,
    ffwm_time_profile,
    ffwm_value,
    single_group_profile,
    transmission_spectrum,
    transmission_time_profile,
    transmission_value,
)

__all__ = [
    "__version__",
    "analysis", "config", "kernels", "memory", "oracle", "params",
    "runner", "writing",
    "DegenerateSpectrum", "NonStationaryInput", "NotConverged", "WidthReport",
    "detect_stationarity", "fwhm", "gain_absorption_separation",
    "linewidth_evolution", "temperature_from_separation",
    "ExperimentConfig", "ParseError", "load_config", "parse_config",
    "NonFiniteIntegrand", "QuadratureSpec", "integrate", "maxwell_1d",
    "phase_diff_kernel",
    "PhaseSchedule", "StoredCoherence", "WindowError", "dark_phase_coherence",
    "retrieved_ffwm_value", "retrieved_probe_value", "retrieved_spectrum",
    "retrieved_time_profile", "stored_coherence",
    "LadderState", "StabilityError", "init_ladder", "oracle_report", "step",
    "DerivedParams", "PhysicalParams", "ValidationError", "cesium_params",
    "derive",
    "RunManifest", "run",
    "Spectrum", "TimeProfile", "ffwm_spectrum", "ffwm_time_profile",
    "ffwm_value", "single_group_profile", "transmission_spectrum",
    "transmission_time_profile", "transmission_value",
]
