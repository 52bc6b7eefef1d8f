"""Momentum-space kernels and deterministic quadrature.

Conventions that the rest of the package relies on:

* ``sinc(u)`` is the UNNORMALIZED cardinal sine sin(u)/u.  It is NOT
  numpy.sinc, which evaluates sin(pi*u)/(pi*u); mixing the two shifts
  every resonance by a factor of pi.
* ``phase_diff_kernel(phi, t)`` is (1 - exp(i*phi*t)) / phi, the response
  of an undamped coherence driven at detuning phi for a time t.  Its
  phi -> 0 limit is -1j*t; a series branch below |phi*t| = 1e-4 keeps the
  removable singularity exact, and the direct branch is evaluated through
  2*sin^2(x/2) - i*sin(x) so there is no catastrophic cancellation just
  above the threshold.
* Quadrature is a fixed trapezoid rule on a uniform, symmetric momentum
  grid.  No adaptivity: identical inputs give identical bytes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.polynomial.hermite_e import hermegauss

__all__ = [
    "NonFiniteIntegrand",
    "QuadratureSpec",
    "QuadratureResult",
    "sinc",
    "phase_diff_kernel",
    "maxwell_1d",
    "momentum_grid",
    "integrate",
    "resolved_num_points",
]

# Below this |phi*t| the kernel and sinc switch to their Taylor branches.
SERIES_THRESHOLD = 1.0e-4


class NonFiniteIntegrand(ArithmeticError):
    """Integrand returned NaN/inf; carries the offending momenta."""

    def __init__(self, message: str, points: np.ndarray):
        super().__init__(message)
        self.points = points


def sinc(u):
    """Unnormalized cardinal sine sin(u)/u with a series branch near 0.

    Accepts scalars or arrays.  For |u| < 1e-4 uses
    1 - u^2/6 + u^4/120 (next term ~1e-28, far below double precision).
    """
    arr = np.asarray(u, dtype=float)
    small = np.abs(arr) < SERIES_THRESHOLD
    safe = np.where(small, 1.0, arr)
    direct = np.sin(safe) / safe
    u2 = arr * arr
    series = 1.0 - u2 / 6.0 + u2 * u2 / 120.0
    out = np.where(small, series, direct)
    if np.isscalar(u) or getattr(u, "ndim", 1) == 0:
        return float(out)
    return out


def phase_diff_kernel(phi, t: float):
    """(1 - exp(1j*phi*t)) / phi, elementwise in phi.

    phi : rad/s detuning(s), scalar or array.
    t   : s, elapsed drive time (scalar, may be 0).

    The phi -> 0 limit is -1j*t.  Writing x = phi*t, the direct branch uses
    1 - exp(i x) = 2*sin(x/2)^2 - i*sin(x), which is stable for small x;
    below |x| = 1e-4 the Taylor branch t*(-1j + x/2 + 1j*x^2/6 - x^3/24)
    takes over (agreement with the direct branch at the seam is at the
    1e-15 level).
    """
    arr = np.asarray(phi, dtype=float)
    x = arr * t
    small = np.abs(x) < SERIES_THRESHOLD
    safe_x = np.where(small, 1.0, x)
    half = 0.5 * safe_x
    s = np.sin(half)
    direct = t * (2.0 * s * s - 1j * np.sin(safe_x)) / safe_x
    series = t * ((0.5 * x - x**3 / 24.0) + 1j * (x * x / 6.0 - 1.0))
    out = np.where(small, series, direct)
    if np.isscalar(phi) or getattr(phi, "ndim", 1) == 0:
        return complex(out)
    return out


def maxwell_1d(p, p_u: float):
    """One-dimensional thermal momentum density exp(-p^2/2p_u^2)/(sqrt(2 pi) p_u)."""
    p = np.asarray(p, dtype=float)
    norm = 1.0 / (math.sqrt(2.0 * math.pi) * p_u)
    out = norm * np.exp(-0.5 * (p / p_u) ** 2)
    if out.ndim == 0:
        return float(out)
    return out


@dataclass(frozen=True)
class QuadratureSpec:
    """Momentum-grid description.

    momentum_halfwidth : grid spans [-halfwidth * p_u, +halfwidth * p_u]
    num_points         : samples; odd and >= 51 for the trapezoid scheme
    scheme             : 'trapezoid' (default) or 'gauss_weighted'
                         (Gauss-Hermite nodes; accurate only while the
                         integrand oscillates slowly, i.e. small t)
    """

    momentum_halfwidth: float = 6.0
    num_points: int = 4001
    scheme: str = "trapezoid"

    def __post_init__(self):
        if self.scheme not in ("trapezoid", "gauss_weighted"):
            raise ValueError(f"scheme: unknown quadrature scheme {self.scheme!r}")
        if not self.momentum_halfwidth >= 4.0:
            raise ValueError(
                f"momentum_halfwidth: need >= 4 thermal widths, got {self.momentum_halfwidth!r}"
            )
        if self.scheme == "trapezoid":
            if self.num_points < 51 or self.num_points % 2 == 0:
                raise ValueError(
                    f"num_points: trapezoid grid must be odd and >= 51, got {self.num_points!r}"
                )
        else:
            if not (2 <= self.num_points <= 500):
                raise ValueError(
                    f"num_points: gauss_weighted supports 2..500 nodes, got {self.num_points!r}"
                )


@dataclass(frozen=True)
class QuadratureResult:
    value: complex
    error_estimate: float


def momentum_grid(quad: QuadratureSpec, p_u: float, num_points: int | None = None):
    """Return (points, weights) so that sum(f(points) * weights) ~ integral f dp.

    num_points overrides quad.num_points (used by the automatic
    oscillation-resolution bump); it must obey the same parity rule.
    """
    n = quad.num_points if num_points is None else num_points
    if quad.scheme == "trapezoid":
        if n < 51 or n % 2 == 0:
            raise ValueError(f"num_points override must be odd and >= 51, got {n!r}")
        half = quad.momentum_halfwidth * p_u
        points = np.linspace(-half, half, n)
        h = 2.0 * half / (n - 1)
        weights = np.full(n, h)
        weights[0] = 0.5 * h
        weights[-1] = 0.5 * h
        return points, weights
    # Gauss-Hermite with probabilists' weight exp(-x^2/2): absorb the weight
    # into the quadrature coefficients so the caller integrates plain f(p).
    x, w = hermegauss(n)
    points = p_u * x
    weights = p_u * w * np.exp(0.5 * x * x)
    return points, weights


def integrate(func, quad: QuadratureSpec, p_u: float,
              num_points: int | None = None) -> QuadratureResult:
    """Deterministic quadrature of ``func`` over the momentum grid.

    func maps an ndarray of momenta to same-shape (possibly complex) values.
    The error estimate is the difference against the every-other-point
    subgrid (trapezoid) or a half-order rule (gauss_weighted); halving the
    step once more changes the value by less than this estimate for the
    smooth integrands this package produces.
    """
    points, weights = momentum_grid(quad, p_u, num_points)
    values = np.asarray(func(points))
    if values.shape != points.shape:
        raise ValueError("integrand must return one value per momentum sample")
    bad = ~np.isfinite(values)
    if bad.any():
        raise NonFiniteIntegrand(
            f"integrand not finite at {int(bad.sum())} of {points.size} samples",
            points[bad],
        )
    fine = complex(np.sum(values * weights))
    if quad.scheme == "trapezoid":
        sub_vals = values[::2]
        sub_pts = points[::2]
        h2 = sub_pts[1] - sub_pts[0]
        sub_w = np.full(sub_pts.size, h2)
        sub_w[0] = 0.5 * h2
        sub_w[-1] = 0.5 * h2
        coarse = complex(np.sum(sub_vals * sub_w))
    else:
        n2 = max(2, (points.size // 2) | 1)
        pts2, w2 = momentum_grid(quad, p_u, n2)
        coarse = complex(np.sum(np.asarray(func(pts2)) * w2))
    scale = float(np.sum(np.abs(values) * np.abs(weights)))
    estimate = abs(fine - coarse) + 1.0e-15 * scale
    return QuadratureResult(value=fine, error_estimate=estimate)


def resolved_num_points(quad: QuadratureSpec, p_u: float, phase_rate: float,
                        points_per_cycle: float = 8.0) -> int:
    """Point count needed to resolve exp(i*phase) with d(phase)/dp = phase_rate.

    phase_rate is in rad per (kg*m/s).  Returns an odd count >= the
    configured num_points, so callers can pass it straight to momentum_grid.
    Only
    meaningful for the trapezoid scheme; gauss_weighted is returned as-is.
    """
    if quad.scheme != "trapezoid":
        return quad.num_points
    span = 2.0 * quad.momentum_halfwidth * p_u
    cycles = span * abs(phase_rate) / (2.0 * math.pi)
    needed = int(math.ceil(points_per_cycle * cycles)) + 1
    n = max(quad.num_points, needed)
    if n % 2 == 0:
        n += 1
    return n
