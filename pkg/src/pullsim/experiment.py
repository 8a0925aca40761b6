"""Scenario orchestration: stepped power sweeps and their comparisons.

A sweep steps the injected power over a dBm axis, integrates the
oscillator phase at each dwell, synthesizes the RF baseband and the
atomic IF record from the same phase path, and reduces both to
spectrograms, peak tracks, fits, and responsivity curves.  The pair
comparison reproduces the two-detuning ordering measurement, and the
consistency check quantifies how faithfully the atomic readout follows
the RF-domain beat.
"""

from __future__ import annotations

import dataclasses
import math
from typing import Optional

import numpy as np

from .analysis import (
    AdlerFit,
    PeakTrack,
    ResponsivityCurve,
    fit_adler_model,
    responsivity_numeric,
    track_peaks,
)
from .atoms import DriveFields, LadderSystem, RfScene, cesium_defaults, if_photodetector_signal
from .errors import DataError, PullsimError
from .oscillator import (
    STEP_BOUND_RAD,
    AdlerTrajectory,
    OscillatorParams,
    SoftPullModel,
    integrate_adler,
    kappa_from_power,
    pulled_detuning_soft,
    synthesize_baseband,
)
from .signal import BandpassSpec, Spectrogram, TimeSeries, bandpass, dbm_to_mw, stft

__all__ = [
    "SceneCalibration",
    "ScenarioConfig",
    "SweepResult",
    "ComparisonReport",
    "ConsistencyReport",
    "run_power_sweep",
    "run_detuning_comparison",
    "rf_atomic_consistency",
]

# A step counts as the onset of strong frequency displacement once the
# track has dropped by this fraction of its initial value.
ONSET_DROP_FRACTION = 0.1
_TIE_EPS = 1e-9


@dataclasses.dataclass(frozen=True)
class SceneCalibration:
    """RF scene calibration: LO Rabi amplitude plus signal Rabi per sqrt(mW)."""

    omega_lo: float
    rabi_per_sqrt_mw: float
    delta_sig: float = 0.0
    track_lo_detuning: bool = False

    def __post_init__(self) -> None:
        if self.omega_lo < 0:
            raise DataError(f"omega_lo must be >= 0, got {self.omega_lo}")
        if self.rabi_per_sqrt_mw < 0:
            raise DataError(f"rabi_per_sqrt_mw must be >= 0, got {self.rabi_per_sqrt_mw}")

    def omega_sig(self, p_inj_dbm: float) -> float:
        return self.rabi_per_sqrt_mw * math.sqrt(dbm_to_mw(p_inj_dbm))


@dataclasses.dataclass(frozen=True)
class ScenarioConfig:
    """Everything one sweep needs, validated on construction.

    ``soft_model`` switches the per-step phase path from the integrated
    phase equation to the closed-form softened law (a forward/inverse
    diagnostic; frequency noise is ignored on that route).
    """

    oscillator: OscillatorParams
    atoms: LadderSystem = dataclasses.field(default_factory=cesium_defaults)
    fields: DriveFields = None
    scene: SceneCalibration = None
    soft_model: Optional[SoftPullModel] = None
    start_dbm: float = -50.0
    stop_dbm: float = -20.0
    step_db: float = 1.0
    dwell_s: float = 0.01
    fs: float = 2e6
    transient_fraction: float = 0.2
    oversample: int = 5
    band: tuple = (10e3, 250e3)
    stft_window: int = 4096
    stft_hop: int = 1024
    filter_order: int = 4
    phi0: float = 0.0
    seed: int = 0

    def __post_init__(self) -> None:
        if self.fields is None:
            object.__setattr__(
                self,
                "fields",
                DriveFields(omega_p=2 * math.pi * 52e3, omega_c=2 * math.pi * 5e6, omega_rf=0.0),
            )
        if self.scene is None:
            object.__setattr__(
                self,
                "scene",
                SceneCalibration(omega_lo=2 * math.pi * 1e6, rabi_per_sqrt_mw=2 * math.pi * 1e6),
            )
        if np.asarray(self.fields.omega_p).ndim != 0:
            raise DataError("fields.omega_p must be a scalar in a scenario")
        if not self.stop_dbm >= self.start_dbm:
            raise DataError("stop_dbm must be >= start_dbm (sweep is monotone increasing)")
        if not self.step_db > 0:
            raise DataError(f"step_db must be positive, got {self.step_db}")
        if not self.dwell_s > 0:
            raise DataError(f"dwell_s must be positive, got {self.dwell_s}")
        if not self.fs > 0:
            raise DataError(f"fs must be positive, got {self.fs}")
        w = int(self.stft_window)
        if w < 16 or w & (w - 1):
            raise DataError(f"stft_window must be a power of two >= 16, got {self.stft_window}")
        if int(self.stft_hop) < 1:
            raise DataError(f"stft_hop must be >= 1, got {self.stft_hop}")
        if self.dwell_s * self.fs < 4 * w:
            raise DataError(
                f"dwell_s*fs = {self.dwell_s * self.fs:.0f} samples is below "
                f"4*stft_window = {4 * w}; lengthen dwell_s"
            )
        if not 0.0 <= self.transient_fraction <= 0.9:
            raise DataError(
                f"transient_fraction must lie in [0, 0.9], got {self.transient_fraction}"
            )
        n_step = int(round(self.dwell_s * self.fs))
        if n_step - int(round(self.transient_fraction * n_step)) < w:
            raise DataError(
                "transient_fraction leaves fewer samples than one stft_window per step"
            )
        lo, hi = float(self.band[0]), float(self.band[1])
        if not 0.0 < lo < hi < self.fs / 2:
            raise DataError(f"band must satisfy 0 < lo < hi < fs/2, got ({lo}, {hi})")
        # quasi-static readout: beat content must stay slow against the
        # probe coherence rate for the per-sample steady state to hold
        qs_limit = self.atoms.gamma2 / (2 * math.pi) / 4
        if hi > qs_limit:
            raise DataError(
                f"band upper edge {hi:.4g} Hz exceeds the quasi-static limit "
                f"gamma2/(2*pi)/4 = {qs_limit:.4g} Hz"
            )
        BandpassSpec(f_lo=lo, f_hi=hi, order=int(self.filter_order))
        if int(self.oversample) < 1:
            raise DataError(f"oversample must be >= 1, got {self.oversample}")
        dt = 1.0 / (self.fs * int(self.oversample))
        kappa_top = kappa_from_power(self.oscillator.kappa0, self.stop_dbm)
        rate = 2 * math.pi * max(abs(self.oscillator.delta_f0), kappa_top)
        if dt * rate >= STEP_BOUND_RAD:
            raise DataError(
                f"integration step dt*rate = {dt * rate:.3g} rad at the sweep top "
                f">= {STEP_BOUND_RAD}; increase oversample"
            )
        if not math.isfinite(self.phi0):
            raise DataError("phi0 must be finite")
        if int(self.seed) < 0:
            raise DataError(f"seed must be >= 0, got {self.seed}")
        object.__setattr__(self, "band", (lo, hi))
        object.__setattr__(self, "oversample", int(self.oversample))
        object.__setattr__(self, "stft_window", w)
        object.__setattr__(self, "stft_hop", int(self.stft_hop))
        object.__setattr__(self, "filter_order", int(self.filter_order))
        object.__setattr__(self, "seed", int(self.seed))

    def power_steps(self) -> np.ndarray:
        """The sweep's dBm axis, ascending."""
        return np.arange(self.start_dbm, self.stop_dbm + self.step_db / 2, self.step_db)

    def bandpass_spec(self) -> BandpassSpec:
        return BandpassSpec(f_lo=self.band[0], f_hi=self.band[1], order=self.filter_order)


@dataclasses.dataclass(frozen=True)
class SweepResult:
    """All observables of one stepped power sweep.

    Fits and responsivity curves are ``None`` when a track has too few
    valid steps to support them (fewer than 5 and 3 points); the
    spectrograms and tracks themselves are always present.
    """

    power_dbm: np.ndarray
    schedule: np.ndarray
    rf_spectrogram: Spectrogram
    if_spectrogram: Spectrogram
    rf_track: PeakTrack
    if_track: PeakTrack
    rf_fit: Optional[AdlerFit]
    if_fit: Optional[AdlerFit]
    rf_responsivity: Optional[ResponsivityCurve]
    if_responsivity: Optional[ResponsivityCurve]

    def __post_init__(self) -> None:
        if not (
            np.array_equal(self.rf_track.p_inj_dbm, self.power_dbm)
            and np.array_equal(self.if_track.p_inj_dbm, self.power_dbm)
        ):
            raise DataError("tracks must share the sweep power axis")


@dataclasses.dataclass(frozen=True)
class ComparisonReport:
    """Ordering verdicts for a two-scenario comparison.

    Verdict strings are "first", "second", or "tie", named after the
    argument order of the comparison call.
    """

    first_delta_f0: float
    second_delta_f0: float
    first_onset_dbm: Optional[float]
    second_onset_dbm: Optional[float]
    onset_lower: str
    compare_at_dbm: float
    first_responsivity: float
    second_responsivity: float
    responsivity_higher: str
    first_peak_responsivity: float
    second_peak_responsivity: float

    def to_text(self) -> str:
        def fmt(x):
            return "none" if x is None else f"{x:.2f} dBm"

        lines = [
            f"delta_f0: first = {self.first_delta_f0:.6g} Hz, "
            f"second = {self.second_delta_f0:.6g} Hz",
            f"onset of strong displacement: first = {fmt(self.first_onset_dbm)}, "
            f"second = {fmt(self.second_onset_dbm)} -> lower: {self.onset_lower}",
            f"responsivity at {self.compare_at_dbm:.2f} dBm: "
            f"first = {self.first_responsivity:.6g} Hz/dB, "
            f"second = {self.second_responsivity:.6g} Hz/dB "
            f"-> higher: {self.responsivity_higher}",
            f"peak responsivity: first = {self.first_peak_responsivity:.6g} Hz/dB, "
            f"second = {self.second_peak_responsivity:.6g} Hz/dB",
        ]
        return "\n".join(lines) + "\n"


@dataclasses.dataclass(frozen=True)
class ConsistencyReport:
    """Per-power deviation between the RF and atomic tracks."""

    p_inj_dbm: np.ndarray
    deviation_hz: np.ndarray
    if_linewidth_hz: np.ndarray
    flagged: np.ndarray
    diagnostic: str = ""


def _step_phase(cfg: ScenarioConfig, p_dbm: float, phi_start: float, seed: int,
                n_keep: int, t_start: float) -> tuple:
    """Phase path for one dwell on the output grid, plus the carry phase."""
    if cfg.soft_model is not None:
        df = pulled_detuning_soft(cfg.soft_model, dbm_to_mw(p_dbm))
        phi = phi_start + 2 * math.pi * df * (np.arange(n_keep + 1) / cfg.fs)
    else:
        dt = 1.0 / (cfg.fs * cfg.oversample)
        n_fast = n_keep * cfg.oversample
        traj = integrate_adler(
            cfg.oscillator, p_dbm, duration=n_fast * dt, dt=dt, seed=seed, phi0=phi_start
        )
        phi = traj.phi[:: cfg.oversample]
    carry = float(phi[n_keep] % (2 * math.pi))
    return AdlerTrajectory(dt=1.0 / cfg.fs, phi=phi[:n_keep], t0=t_start), carry


def run_power_sweep(cfg: ScenarioConfig) -> SweepResult:
    """Run one stepped power sweep end to end.

    Per step: evolve the oscillator phase through the dwell (carrying
    phase across steps for continuity), synthesize the RF baseband and
    the atomic IF record from that phase path, band-pass the IF record,
    discard the transient fraction of both records, and accumulate
    spectrogram columns.  The stacked spectrograms are then reduced to
    tracks, fits, and responsivity curves.  Deterministic for a given
    config, including its seed.
    """
    steps = cfg.power_steps()
    n_keep = int(round(cfg.dwell_s * cfg.fs))
    dwell_eff = n_keep / cfg.fs
    n_skip = int(round(cfg.transient_fraction * n_keep))
    seeds = np.random.SeedSequence(cfg.seed).generate_state(steps.size)
    bp = cfg.bandpass_spec()

    rf_cols, if_cols, times, schedule = [], [], [], []
    freq_axis = None
    phi_carry = float(cfg.phi0)
    for i, p in enumerate(steps):
        p = float(p)
        try:
            t_start = i * dwell_eff
            traj, phi_carry = _step_phase(cfg, p, phi_carry, int(seeds[i]), n_keep, t_start)
            rf_ts = synthesize_baseband(cfg.oscillator, traj)
            scene = RfScene(
                omega_lo=cfg.scene.omega_lo,
                omega_sig=cfg.scene.omega_sig(p),
                phi_lo=traj,
                delta_sig=cfg.scene.delta_sig,
                track_lo_detuning=cfg.scene.track_lo_detuning,
            )
            if_ts = if_photodetector_signal(cfg.atoms, cfg.fields, scene, cfg.fs, dwell_eff)
            if_ts = bandpass(if_ts, bp)
            for ts, cols in ((rf_ts, rf_cols), (if_ts, if_cols)):
                kept = TimeSeries(
                    fs=cfg.fs, samples=ts.samples[n_skip:], t0=ts.t0 + n_skip / cfg.fs
                )
                spg = stft(kept, window_len=cfg.stft_window, hop=cfg.stft_hop)
                cols.append(spg.power_db)
                if cols is rf_cols:
                    times.append(spg.time_axis)
                    schedule.append(np.full(spg.time_axis.size, p))
                    freq_axis = spg.freq_axis
        except PullsimError as err:
            raise type(err)(f"{err} (power step {i} at {p:.2f} dBm)") from err

    time_axis = np.concatenate(times)
    sched = np.concatenate(schedule)
    rf_spg = Spectrogram(time_axis=time_axis, freq_axis=freq_axis,
                         power_db=np.hstack(rf_cols))
    if_spg = Spectrogram(time_axis=time_axis, freq_axis=freq_axis,
                         power_db=np.hstack(if_cols))
    rf_track = track_peaks(rf_spg, sched, cfg.band)
    if_track = track_peaks(if_spg, sched, cfg.band)
    return SweepResult(
        power_dbm=steps,
        schedule=sched,
        rf_spectrogram=rf_spg,
        if_spectrogram=if_spg,
        rf_track=rf_track,
        if_track=if_track,
        rf_fit=_try_fit(rf_track),
        if_fit=_try_fit(if_track),
        rf_responsivity=_try_responsivity(rf_track),
        if_responsivity=_try_responsivity(if_track),
    )


def _try_fit(track: PeakTrack) -> Optional[AdlerFit]:
    # a sweep with too few valid steps still has spectrograms worth keeping
    sub = track.valid_subset()
    return fit_adler_model(sub) if len(sub) >= 5 else None


def _try_responsivity(track: PeakTrack) -> Optional[ResponsivityCurve]:
    sub = track.valid_subset()
    return responsivity_numeric(sub) if len(sub) >= 3 else None


def _onset_power(track: PeakTrack) -> Optional[float]:
    sub = track.valid_subset()
    if len(sub) == 0:
        return None
    drop = np.nonzero(sub.f_peak < (1.0 - ONSET_DROP_FRACTION) * sub.f_peak[0])[0]
    return float(sub.p_inj_dbm[drop[0]]) if drop.size else None


def _lower_verdict(a: Optional[float], b: Optional[float]) -> str:
    if a is None and b is None:
        return "tie"
    if a is None:
        return "second"
    if b is None:
        return "first"
    if abs(a - b) <= _TIE_EPS:
        return "tie"
    return "first" if a < b else "second"


def run_detuning_comparison(
    cfg_small: ScenarioConfig, cfg_large: ScenarioConfig
) -> tuple:
    """Run two sweeps on a shared axis and report their ordering.

    Requires identical sweep axes and identical kappa0 so the two
    scenarios differ only in what the comparison is about.  Returns
    ``(result_small, result_large, report)``; report verdicts are named
    "first"/"second" by argument order, so swapping the arguments swaps
    the verdicts symmetrically.
    """
    if not np.array_equal(cfg_small.power_steps(), cfg_large.power_steps()):
        raise DataError("comparison requires identical sweep power axes")
    if cfg_small.oscillator.kappa0 != cfg_large.oscillator.kappa0:
        raise DataError("comparison requires identical kappa0")
    res_a = run_power_sweep(cfg_small)
    res_b = run_power_sweep(cfg_large)

    onset_a = _onset_power(res_a.if_track)
    onset_b = _onset_power(res_b.if_track)

    ra, rb = res_a.if_responsivity, res_b.if_responsivity
    if ra is None or rb is None:
        raise DataError("comparison requires a responsivity curve from both sweeps")
    common = np.intersect1d(ra.p_inj_dbm, rb.p_inj_dbm)
    if common.size == 0:
        raise DataError("no common valid power step to compare responsivity at")
    p_cmp = float(common[-1])
    va = float(ra.responsivity_hz_per_db[np.searchsorted(ra.p_inj_dbm, p_cmp)])
    vb = float(rb.responsivity_hz_per_db[np.searchsorted(rb.p_inj_dbm, p_cmp)])
    if abs(va - vb) <= _TIE_EPS * max(abs(va), abs(vb), 1.0):
        resp_verdict = "tie"
    else:
        resp_verdict = "first" if va > vb else "second"

    report = ComparisonReport(
        first_delta_f0=cfg_small.oscillator.delta_f0,
        second_delta_f0=cfg_large.oscillator.delta_f0,
        first_onset_dbm=onset_a,
        second_onset_dbm=onset_b,
        onset_lower=_lower_verdict(onset_a, onset_b),
        compare_at_dbm=p_cmp,
        first_responsivity=va,
        second_responsivity=vb,
        responsivity_higher=resp_verdict,
        first_peak_responsivity=float(np.max(ra.responsivity_hz_per_db)),
        second_peak_responsivity=float(np.max(rb.responsivity_hz_per_db)),
    )
    return res_a, res_b, report


def rf_atomic_consistency(result: SweepResult) -> ConsistencyReport:
    """Compare the RF and atomic tracks power step by power step.

    Reports |f_rf - f_if| wherever both tracks hold a valid tone and
    flags steps whose deviation exceeds the local IF linewidth.  With no
    jointly valid step the report is empty and carries a diagnostic.
    """
    both = result.rf_track.valid & result.if_track.valid
    dev = np.abs(result.rf_track.f_peak - result.if_track.f_peak)[both]
    lw = result.if_track.linewidth_3db[both]
    diagnostic = ""
    if not both.any():
        diagnostic = "no power step holds a valid in-band tone in both tracks"
    return ConsistencyReport(
        p_inj_dbm=result.power_dbm[both],
        deviation_hz=dev,
        if_linewidth_hz=lw,
        flagged=dev > lw,
        diagnostic=diagnostic,
    )
