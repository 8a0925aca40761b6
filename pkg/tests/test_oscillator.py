"""Adler phase dynamics: locking, pulling, softened law, baseband synthesis."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pullsim import (
    AdlerTrajectory,
    DataError,
    OscillatorParams,
    SoftPullModel,
    beat_frequency_analytic,
    dbm_to_mw,
    integrate_adler,
    kappa_from_power,
    measure_beat_frequency,
    pulled_detuning_soft,
    responsivity_analytic,
    stft,
    synthesize_baseband,
)

DT = 1e-7  # resolves 2*pi*131 kHz at 0.082 rad per step


def params_with_kappa(delta_f0, kappa):
    """Coupling exactly kappa when driven at 0 dBm."""
    return OscillatorParams.from_detuning(delta_f0, kappa0=kappa)


class TestParams:
    def test_detuning_is_derived(self):
        p = OscillatorParams(f_free=5.489131e9, f_inj=5.489e9, kappa0=0.0)
        assert p.delta_f0 == pytest.approx(131e3)

    def test_from_detuning_round_trip(self):
        p = OscillatorParams.from_detuning(-96e3, kappa0=2.0)
        assert p.delta_f0 == pytest.approx(-96e3)
        assert p.f_free == pytest.approx(p.f_inj - 96e3)

    def test_validation(self):
        with pytest.raises(DataError):
            OscillatorParams.from_detuning(1e3, kappa0=-1.0)
        with pytest.raises(DataError):
            OscillatorParams.from_detuning(1e3, freq_noise_psd=-1.0)
        with pytest.raises(DataError):
            OscillatorParams.from_detuning(1e3, amplitude=0.0)

    def test_kappa_from_power(self):
        assert kappa_from_power(600e3, 0.0) == pytest.approx(600e3)
        assert kappa_from_power(600e3, -20.0) == pytest.approx(60e3)
        assert kappa_from_power(0.0, -10.0) == 0.0


class TestIntegration:
    def test_free_running_is_exact(self):
        p = params_with_kappa(131e3, 0.0)
        traj = integrate_adler(p, -30.0, duration=0.01, dt=DT, phi0=0.7)
        expect = 0.7 + 2 * np.pi * 131e3 * traj.times()
        np.testing.assert_allclose(traj.phi, expect, rtol=0, atol=1e-6)

    def test_locked_fixed_point_stationary(self):
        # coupling above threshold freezes the phase at arcsin(dw0/kappa)
        p = params_with_kappa(100e3, 120e3)
        traj = integrate_adler(p, 0.0, duration=2e-3, dt=DT)
        tail = traj.phi[-1000:]
        assert np.max(np.abs(np.diff(tail))) < 1e-9
        assert np.sin(tail[-1]) == pytest.approx(100e3 / 120e3, abs=1e-9)

    def test_beat_example_against_both_references(self):
        p = params_with_kappa(131e3, 78.6e3)
        analytic = beat_frequency_analytic(131e3, 78.6e3)
        traj = integrate_adler(p, 0.0, duration=2e-3, dt=DT)
        measured = measure_beat_frequency(traj)
        assert measured == pytest.approx(analytic, rel=5e-3)
        # second route: reference integration at dt/16 agrees with both
        fine = measure_beat_frequency(
            integrate_adler(p, 0.0, duration=2e-3, dt=DT / 16)
        )
        assert measured == pytest.approx(fine, rel=1e-3)
        assert analytic == pytest.approx(104.8e3, rel=1e-3)

    @pytest.mark.parametrize("ratio", [0.3, 0.9])
    def test_numeric_vs_analytic_beat(self, ratio):
        delta_f0 = 131e3
        p = params_with_kappa(delta_f0, ratio * delta_f0)
        beats = beat_frequency_analytic(delta_f0, ratio * delta_f0)
        duration = max(2e-3, 120 / beats)
        measured = measure_beat_frequency(integrate_adler(p, 0.0, duration, DT))
        assert measured == pytest.approx(beats, rel=5e-3)

    def test_sign_symmetry(self):
        kwargs = dict(p_inj_dbm=0.0, duration=1e-3, dt=DT)
        pos = integrate_adler(params_with_kappa(131e3, 60e3), phi0=0.4, **kwargs)
        neg = integrate_adler(params_with_kappa(-131e3, 60e3), phi0=-0.4, **kwargs)
        np.testing.assert_allclose(neg.phi, -pos.phi, rtol=0, atol=1e-9)
        assert measure_beat_frequency(neg) == pytest.approx(
            -measure_beat_frequency(pos), rel=1e-9
        )

    def test_noise_reproducibility(self):
        p = OscillatorParams.from_detuning(131e3, kappa0=60e3, freq_noise_psd=1e4)
        a = integrate_adler(p, 0.0, 1e-3, DT, seed=42)
        b = integrate_adler(p, 0.0, 1e-3, DT, seed=42)
        c = integrate_adler(p, 0.0, 1e-3, DT, seed=43)
        assert np.array_equal(a.phi, b.phi)
        assert not np.array_equal(a.phi, c.phi)

    def test_step_bound_rejected(self):
        p = params_with_kappa(131e3, 0.0)
        with pytest.raises(DataError, match="step too coarse"):
            integrate_adler(p, -30.0, duration=1e-3, dt=2e-7)

    def test_bad_duration_and_dt(self):
        p = params_with_kappa(1e3, 0.0)
        with pytest.raises(DataError, match="dt"):
            integrate_adler(p, 0.0, duration=1e-3, dt=0.0)
        with pytest.raises(DataError, match="duration"):
            integrate_adler(p, 0.0, duration=1e-9, dt=1e-5)


class TestAnalyticBeat:
    def test_reference_points(self):
        assert beat_frequency_analytic(131e3, 0.0) == pytest.approx(131e3)
        assert beat_frequency_analytic(-131e3, 0.0) == pytest.approx(131e3)
        assert beat_frequency_analytic(131e3, 131e3) == 0.0
        assert beat_frequency_analytic(131e3, 200e3) == 0.0

    @settings(max_examples=60, deadline=None)
    @given(
        st.floats(min_value=1.0, max_value=1e6),
        st.floats(min_value=0.0, max_value=2e6),
    )
    def test_bounded_and_locked_property(self, delta_f0, kappa):
        beat = beat_frequency_analytic(delta_f0, kappa)
        assert 0.0 <= beat <= abs(delta_f0)
        if kappa >= abs(delta_f0):
            assert beat == 0.0


class TestMeasureBeat:
    def test_locked_trajectory_reports_near_zero(self):
        p = params_with_kappa(100e3, 120e3)
        traj = integrate_adler(p, 0.0, duration=2e-3, dt=DT)
        assert abs(measure_beat_frequency(traj)) < 1e-3 * 2 * np.pi * 100e3

    def test_transient_fraction_validated(self):
        traj = AdlerTrajectory(dt=1e-6, phi=np.linspace(0, 100, 1000))
        with pytest.raises(DataError):
            measure_beat_frequency(traj, transient_fraction=1.0)


class TestSoftModel:
    def test_limits(self):
        m = SoftPullModel(delta_f0=131e3, beta=0.8)
        assert pulled_detuning_soft(m, 0.0) == pytest.approx(131e3)
        assert pulled_detuning_soft(m, 3.0 / 0.8) == pytest.approx(131e3 / 2)
        assert pulled_detuning_soft(m, 1e9) < 10.0

    def test_monotone_and_sign_preserving(self):
        m = SoftPullModel(delta_f0=131e3, beta=0.8)
        p = np.linspace(0.0, 50.0, 200)
        y = pulled_detuning_soft(m, p)
        assert np.all(np.diff(y) < 0)
        assert np.all(y > 0)

    def test_rejects_negative_power_and_beta(self):
        with pytest.raises(DataError):
            pulled_detuning_soft(SoftPullModel(1e3, 1.0), -1.0)
        with pytest.raises(DataError):
            SoftPullModel(delta_f0=1e3, beta=0.0)


class TestResponsivity:
    def test_vanishes_at_low_power(self):
        m = SoftPullModel(delta_f0=131e3, beta=0.8)
        assert responsivity_analytic(m, -120.0) < 1e-4

    @pytest.mark.parametrize("beta,p_dbm", [(0.8, -10.0), (15.0, -3.0), (800.0, -25.0)])
    def test_matches_finite_difference(self, beta, p_dbm):
        m = SoftPullModel(delta_f0=131e3, beta=beta)
        h = 0.01
        num = abs(
            pulled_detuning_soft(m, dbm_to_mw(p_dbm + h))
            - pulled_detuning_soft(m, dbm_to_mw(p_dbm - h))
        ) / (2 * h)
        assert responsivity_analytic(m, p_dbm) == pytest.approx(num, rel=1e-6)

    def test_nonnegative_with_single_interior_max(self):
        m = SoftPullModel(delta_f0=131e3, beta=0.8)
        p = np.linspace(-60.0, 40.0, 2001)
        r = responsivity_analytic(m, p)
        assert np.all(r >= 0)
        assert r[0] < 1e-3 * np.max(r) and r[-1] < 0.2 * np.max(r)
        rising = np.diff(r) > 0
        assert np.sum(np.diff(rising.astype(int)) != 0) == 1

    def test_detuning_ordering_near_threshold(self):
        # kappa-matched softening: coupling comparable to the detuning at the
        # sweep top puts the smaller detuning on the steeper flank
        kappa0 = 500e3
        m96 = SoftPullModel(96e3, (kappa0 / 96e3) ** 2)
        m131 = SoftPullModel(131e3, (kappa0 / 131e3) ** 2)
        p_top = -17.0
        assert kappa_from_power(kappa0, p_top) / 96e3 > 0.7
        assert responsivity_analytic(m96, p_top) > responsivity_analytic(m131, p_top)


def decimated_trajectory(p, duration, fs, oversample=8):
    """Integrate on a fine step, keep every oversample-th phase sample."""
    traj = integrate_adler(p, 0.0, duration, dt=1 / (fs * oversample))
    return AdlerTrajectory(dt=1 / fs, phi=traj.phi[::oversample])


class TestBaseband:
    def test_free_running_line_at_detuning(self):
        fs, window = 2e6, 4096
        binw = fs / window
        delta_f0 = 205 * binw
        p = params_with_kappa(delta_f0, 0.0)
        traj = decimated_trajectory(p, 3 * window / fs, fs)
        ts = synthesize_baseband(p, traj)
        assert np.allclose(np.abs(ts.samples), 1.0)
        spg = stft(ts, window_len=window, hop=window)
        k = np.argmax(spg.power_db[:, 0])
        assert spg.freq_axis[k] == pytest.approx(delta_f0, abs=binw / 2)

    def test_locked_line_at_zero(self):
        fs, window = 2e6, 4096
        p = params_with_kappa(100e3, 130e3)
        traj = decimated_trajectory(p, 3 * window / fs, fs)
        spg = stft(synthesize_baseband(p, traj), window_len=window, hop=window)
        k = np.argmax(spg.power_db[:, -1])
        assert abs(spg.freq_axis[k]) <= fs / window

    def test_pulled_line_at_beat_with_harmonics(self):
        fs, window = 2e6, 4096
        binw = fs / window
        p = params_with_kappa(131e3, 110e3)
        beat = beat_frequency_analytic(131e3, 110e3)
        traj = decimated_trajectory(p, 8 * window / fs, fs)
        spg = stft(synthesize_baseband(p, traj), window_len=window, hop=window)
        col = spg.power_db[:, -1]
        k = np.argmax(col)
        assert spg.freq_axis[k] == pytest.approx(beat, abs=binw)
        # non-sinusoidal beat: a visible second harmonic
        k2 = np.argmin(np.abs(spg.freq_axis - 2 * beat))
        window_pow = col[k2 - 2 : k2 + 3]
        assert np.max(window_pow) > col[k] - 40.0
