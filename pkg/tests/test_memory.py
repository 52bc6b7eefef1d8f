"""Dark-phase storage and reading-phase retrieved signals."""

import dataclasses

import numpy as np
import pytest

from rirsim.memory import (
    CHANNEL_RETRIEVED_FFWM,
    CHANNEL_RETRIEVED_PROBE,
    PhaseSchedule,
    WindowError,
    dark_phase_coherence,
    retrieved_ffwm_value,
    retrieved_probe_value,
    retrieved_spectrum,
    retrieved_time_profile,
    stored_coherence,
)
from rirsim.params import rad_per_s_from_khz, seconds_from_us

T1 = seconds_from_us(100.0)
DELTA8 = rad_per_s_from_khz(8.0)


class TestPhaseSchedule:
    def test_valid_construction(self):
        s = PhaseSchedule(seconds_from_us(102.0), seconds_from_us(107.0),
                          seconds_from_us(140.0))
        assert s.t1 < s.t2 < s.t_read_end

    def test_degenerate_immediate_read_allowed(self):
        PhaseSchedule(T1, T1, seconds_from_us(150.0))

    @pytest.mark.parametrize("t1,t2,end", [
        (0.0, 1e-4, 2e-4),
        (-1e-4, 1e-4, 2e-4),
        (1e-4, 0.5e-4, 2e-4),
        (1e-4, 1.5e-4, 1.2e-4),
    ])
    def test_bad_orderings_rejected(self, t1, t2, end):
        with pytest.raises(ValueError):
            PhaseSchedule(t1, t2, end)


class TestStoredCoherence:
    def test_zero_write_time_gives_zero_arrays(self, p500, d500, quad):
        st = stored_coherence(p500, d500, quad, 0.0, 0.0)
        assert np.all(st.probe_amplitudes == 0.0)
        assert np.all(st.ffwm_amplitudes == 0.0)

    def test_negative_write_time_rejected(self, p500, d500, quad):
        with pytest.raises(ValueError, match="t1"):
            stored_coherence(p500, d500, quad, 0.0, -1.0e-6)

    def test_zero_drive_stores_nothing(self, p500, d500, quad):
        silent = dataclasses.replace(d500, omega_eff=0.0)
        st = stored_coherence(p500, silent, quad, DELTA8, T1)
        assert st.prefactor == 0.0
        for t_us in (100.0, 120.0, 150.0):
            assert retrieved_probe_value(st, seconds_from_us(t_us)) == 0.0
            assert retrieved_ffwm_value(st, seconds_from_us(t_us)) == 0.0

    def test_channel_mirror_at_zero_detuning(self, p500, d500, quad):
        # Substituting p -> -p swaps the two stored channels; at delta = 0
        # the swap is exact apart from the sign convention of the thermal
        # weight.
        st = stored_coherence(p500, d500, quad, 0.0, T1)
        mirrored = st.probe_amplitudes[::-1]
        scale = np.max(np.abs(st.ffwm_amplitudes))
        assert np.max(np.abs(st.ffwm_amplitudes + mirrored)) < 1e-3 * scale
        exact = stored_coherence(p500, d500, quad, 0.0, T1, mode="exact_shift")
        mag_gap = np.abs(exact.ffwm_amplitudes) - np.abs(exact.probe_amplitudes[::-1])
        assert np.max(np.abs(mag_gap)) < 1e-3 * np.max(np.abs(exact.ffwm_amplitudes))

    def test_finite_arrays_and_metadata(self, p500, d500, quad):
        st = stored_coherence(p500, d500, quad, DELTA8, T1)
        assert np.all(np.isfinite(st.probe_amplitudes))
        assert np.all(np.isfinite(st.ffwm_amplitudes))
        assert st.delta == DELTA8 and st.t1 == T1
        assert st.momenta.shape == st.weights.shape


class TestRetrievedValues:
    def test_reading_before_write_end_rejected(self, p500, d500, quad):
        st = stored_coherence(p500, d500, quad, 0.0, T1)
        with pytest.raises(WindowError):
            retrieved_probe_value(st, 0.5 * T1)

    def test_zero_detuning_initial_value_dominates(self, p500, d500, quad):
        t = T1 + 1e-9
        center = stored_coherence(p500, d500, quad, 0.0, T1)
        side = stored_coherence(p500, d500, quad, DELTA8, T1)
        assert retrieved_probe_value(center, t) > retrieved_probe_value(side, t)

    def test_decay_within_tens_of_microseconds(self, p500, d500, quad):
        st = stored_coherence(p500, d500, quad, 0.0, T1,
                              resolve_until=T1 + 130e-6)
        v0 = retrieved_probe_value(st, T1 + 1e-9)
        assert retrieved_probe_value(st, T1 + 120e-6) < 0.10 * v0

    def test_channels_equal_at_zero_detuning(self, p500, d500, quad):
        st = stored_coherence(p500, d500, quad, 0.0, T1,
                              resolve_until=T1 + 160e-6)
        times = T1 + np.linspace(0.0, 150e-6, 151)
        probe = np.array([retrieved_probe_value(st, t) for t in times])
        ffwm = np.array([retrieved_ffwm_value(st, t) for t in times])
        assert np.max(np.abs(probe - ffwm)) < 1e-3 * probe[0]

    def test_nonnegative(self, p500, d500, quad):
        st = stored_coherence(p500, d500, quad, DELTA8, T1,
                              resolve_until=T1 + 100e-6)
        for off_us in (0.0, 7.0, 33.0, 90.0):
            assert retrieved_ffwm_value(st, T1 + seconds_from_us(off_us)) >= 0.0

    def test_depends_on_elapsed_time_only(self, p500, d500, quad):
        # Shifting the write-end timestamp shifts the whole reading axis:
        # the retrieved signal is a function of t - t1 alone.
        st = stored_coherence(p500, d500, quad, DELTA8, T1,
                              resolve_until=T1 + 100e-6)
        shifted = dataclasses.replace(st, t1=st.t1 + 30e-6)
        for off in (5e-6, 40e-6, 70e-6):
            a = retrieved_probe_value(st, T1 + off)
            b = retrieved_probe_value(shifted, T1 + 30e-6 + off)
            assert b == pytest.approx(a, rel=1e-12)


class TestReadingWindow:
    def test_non_volatility_across_read_start(self, p500, d500, quad):
        # Fixed absolute evaluation time, three different reading-start
        # times: identical outputs.
        eval_times = np.array([seconds_from_us(145.0), seconds_from_us(150.0)])
        rows = []
        for t2_us in (101.0, 107.0, 140.0):
            sched = PhaseSchedule(T1, seconds_from_us(t2_us), seconds_from_us(150.0))
            pr = retrieved_time_profile(p500, d500, quad, 0.0, sched, eval_times,
                                        CHANNEL_RETRIEVED_PROBE)
            ff = retrieved_time_profile(p500, d500, quad, 0.0, sched, eval_times,
                                        CHANNEL_RETRIEVED_FFWM)
            rows.append(np.concatenate([pr.values, ff.values]))
        rows = np.array(rows)
        assert np.max(np.abs(rows - rows[0])) <= 1e-12 * np.max(rows)

    def test_profile_outside_window_rejected(self, p500, d500, quad):
        sched = PhaseSchedule(T1, seconds_from_us(107.0), seconds_from_us(140.0))
        before = np.array([seconds_from_us(103.0), seconds_from_us(110.0)])
        with pytest.raises(WindowError):
            retrieved_time_profile(p500, d500, quad, 0.0, sched, before,
                                   CHANNEL_RETRIEVED_PROBE)
        past = np.array([seconds_from_us(120.0), seconds_from_us(141.0)])
        with pytest.raises(WindowError):
            retrieved_time_profile(p500, d500, quad, 0.0, sched, past,
                                   CHANNEL_RETRIEVED_PROBE)

    def test_detuned_profiles_superimpose(self, p500, d500, quad):
        sched = PhaseSchedule(T1, seconds_from_us(107.0), seconds_from_us(200.0))
        times = np.linspace(sched.t2, sched.t_read_end, 187)
        plus = retrieved_time_profile(p500, d500, quad, DELTA8, sched, times,
                                      CHANNEL_RETRIEVED_PROBE)
        minus = retrieved_time_profile(p500, d500, quad, -DELTA8, sched, times,
                                       CHANNEL_RETRIEVED_PROBE)
        assert np.max(np.abs(plus.values - minus.values)) < 1e-3 * np.max(plus.values)

    def test_no_revival_above_first_sample(self, p500, d500, quad):
        # Inhomogeneous phases only spread: every later sample stays at or
        # below the value at the start of reading.
        sched = PhaseSchedule(T1, seconds_from_us(107.0), seconds_from_us(260.0))
        times = np.linspace(sched.t2, sched.t_read_end, 307)
        for delta in (0.0, DELTA8, -DELTA8):
            prof = retrieved_time_profile(p500, d500, quad, delta, sched, times,
                                          CHANNEL_RETRIEVED_FFWM)
            assert np.max(prof.values) <= prof.values[0] * (1.0 + 1e-9)

    def test_degenerate_schedule_is_continuous(self, p500, d500, quad):
        sched = PhaseSchedule(T1, T1, seconds_from_us(150.0))
        times = np.array([T1, T1 + 1e-7, seconds_from_us(150.0)])
        prof = retrieved_time_profile(p500, d500, quad, 0.0, sched, times,
                                      CHANNEL_RETRIEVED_PROBE)
        assert abs(prof.values[1] - prof.values[0]) < 1e-2 * prof.values[0]


class TestRetrievedSpectrum:
    def test_single_symmetric_lobe(self, p500, d500, quad):
        sched = PhaseSchedule(seconds_from_us(102.0), seconds_from_us(107.0),
                              seconds_from_us(140.0))
        grid = np.linspace(-DELTA8, DELTA8, 321)
        sp = retrieved_spectrum(p500, d500, quad, grid, sched, seconds_from_us(133.0))
        v = sp.values
        assert sp.channel == CHANNEL_RETRIEVED_PROBE
        assert np.all(v >= 0.0)
        assert np.max(np.abs(v - v[::-1])) < 1e-3 * np.max(v)
        lobes = sum(
            1 for i in range(1, v.size - 1)
            if v[i] > v[i - 1] and v[i] > v[i + 1] and v[i] > 0.05 * np.max(v)
        )
        assert lobes == 1
        # the peak sits in the middle of the window, unlike the dispersive
        # writing-phase transmission
        assert abs(grid[np.argmax(v)]) <= grid[1] - grid[0]

    def test_evaluation_time_outside_window_rejected(self, p500, d500, quad):
        sched = PhaseSchedule(seconds_from_us(102.0), seconds_from_us(107.0),
                              seconds_from_us(140.0))
        grid = np.linspace(-DELTA8, DELTA8, 41)
        with pytest.raises(WindowError):
            retrieved_spectrum(p500, d500, quad, grid, sched, seconds_from_us(105.0))


class TestDarkPhase:
    def test_no_emission_in_the_dark(self):
        for delta in (0.0, DELTA8):
            for t_us in (103.0, 104.5, 106.9):
                assert dark_phase_coherence(delta, seconds_from_us(t_us)) == 0.0
