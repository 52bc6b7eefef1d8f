"""Shared fixtures: default cesium configuration and the slow oracle report.

Session scope everywhere; everything here is immutable, so sharing across
test modules is safe and keeps the oracle runs to a single execution.
"""

import numpy as np
import pytest

from rirsim import analysis, oracle, writing
from rirsim.kernels import QuadratureSpec
from rirsim.memory import PhaseSchedule
from rirsim.params import cesium_params, derive, rad_per_s_from_khz, seconds_from_us


@pytest.fixture(scope="session")
def p500():
    return cesium_params()


@pytest.fixture(scope="session")
def d500(p500):
    return derive(p500)


@pytest.fixture(scope="session")
def quad():
    return QuadratureSpec()


@pytest.fixture(scope="session")
def oracle_report(p500, d500):
    """Full brute-force comparison report at the reference detuning.

    This is the most expensive fixture in the suite (tens of seconds); the
    drive-scaling, step-halving, kick-truncation and trace-drift tests all
    read from this single run.
    """
    return oracle.oracle_report(
        p500, d500, delta=rad_per_s_from_khz(4.0), write_time=100.0e-6
    )


@pytest.fixture(scope="session")
def oracle_memory_finals(p500, d500):
    """Ladder-integrated retrieved signals for three different reading-start
    times but a shared write and shared absolute evaluation grid.

    Returns (finals, first_profiles): finals[i] = (probe, ffwm) at the last
    evaluation time for reading start i; first_profiles is the full
    (TimeProfile, TimeProfile) pair of the earliest reading start.
    """
    delta = rad_per_s_from_khz(4.0)
    t1 = seconds_from_us(100.0)
    finals, first = [], None
    for t2_us in (101.0, 107.0, 140.0):
        sched = PhaseSchedule(t1, seconds_from_us(t2_us), seconds_from_us(150.0))
        pr, ff = oracle.oracle_memory_run(p500, d500, sched, delta, num_times=5)
        finals.append((pr.values[-1], ff.values[-1]))
        if first is None:
            first = (pr, ff)
    return np.array(finals), first


@pytest.fixture(scope="session")
def stationary_transmission(p500, d500, quad):
    """Long-time probe transmission spectrum on a grid centered at the
    recoil shift."""
    r = d500.recoil_shift
    w = d500.doppler_width
    grid = np.linspace(r - 6.0 * w, r + 6.0 * w, 801)
    return writing.transmission_spectrum(p500, d500, quad, grid,
                                         15.0 * d500.tau_stationary)


@pytest.fixture(scope="session")
def stationary_ffwm(p500, d500, quad):
    w = d500.doppler_width
    grid = np.linspace(-6.0 * w, 6.0 * w, 801)
    return writing.ffwm_spectrum(p500, d500, quad, grid,
                                 15.0 * d500.tau_stationary)


WRITE_TIMES = np.array([15e-6, 25e-6, 40e-6, 60e-6, 100e-6,
                        200e-6, 400e-6, 800e-6])
READ_TIMES = np.array([105e-6, 125e-6, 150e-6, 175e-6,
                       200e-6, 225e-6, 250e-6])


@pytest.fixture(scope="session")
def writing_width_sweep(p500, d500, quad):
    """Writing-phase linewidths vs exposure time, both channels, ending on
    a fully stationary point."""
    t_grid = np.append(WRITE_TIMES, 15.0 * d500.tau_stationary)
    out = {}
    for channel in ("transmission", "ffwm"):
        res = analysis.linewidth_evolution(p500, d500, quad, channel, t_grid)
        out[channel] = (t_grid, np.array([w.width for _, w in res]))
    return out


@pytest.fixture(scope="session")
def reading_width_sweep(p500, d500, quad):
    """Retrieved linewidths vs observation time for an immediate read."""
    sched = PhaseSchedule(seconds_from_us(102.0), seconds_from_us(102.0),
                          seconds_from_us(300.0))
    out = {}
    for channel in ("retrieved_probe", "retrieved_ffwm"):
        res = analysis.linewidth_evolution(p500, d500, quad, channel,
                                           READ_TIMES, schedule=sched)
        out[channel] = (READ_TIMES, np.array([w.width for _, w in res]))
    return out


@pytest.fixture(scope="session")
def thermometry_table(quad):
    """Stationary widths and recovered temperatures at three settings."""
    rows = {}
    for t_uk in (125.0, 500.0, 1000.0):
        ps = cesium_params(temperature_uk=t_uk)
        ds = derive(ps)
        r, w = ds.recoil_shift, ds.doppler_width
        grid = np.linspace(r - 6.0 * w, r + 6.0 * w, 801)
        sep = analysis.gain_absorption_separation(
            writing.transmission_spectrum(ps, ds, quad, grid,
                                          15.0 * ds.tau_stationary)).width
        fgrid = np.linspace(-6.0 * w, 6.0 * w, 801)
        wf = analysis.fwhm(
            writing.ffwm_spectrum(ps, ds, quad, fgrid,
                                  15.0 * ds.tau_stationary)).width
        rows[t_uk] = {
            "derived": ds,
            "separation": sep,
            "fwhm": wf,
            "t_from_separation": analysis.temperature_from_separation(sep, ds),
            "t_from_fwhm": analysis.temperature_from_separation(
                wf, ds, metric=analysis.METRIC_FWHM),
        }
    return rows
