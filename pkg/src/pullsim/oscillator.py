"""Self-sustained oscillator under microwave injection.

Phase dynamics follow the Adler equation phi_dot = dw0 - kappa_ang*sin(phi)
in the rotating frame of the injected tone, with the coupling scaling as the
square root of injected power. Alongside the ODE route live the classical
closed-form beat/locking result, a phenomenological softened pulling law with
its analytic responsivity, and baseband waveform synthesis.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DataError
from .signal import TimeSeries, dbm_to_mw

STEP_BOUND_RAD = 0.1

__all__ = [
    "OscillatorParams",
    "SoftPullModel",
    "AdlerTrajectory",
    "kappa_from_power",
    "integrate_adler",
    "beat_frequency_analytic",
    "measure_beat_frequency",
    "pulled_detuning_soft",
    "responsivity_analytic",
    "synthesize_baseband",
]


@dataclass(frozen=True)
class OscillatorParams:
    """Free-running oscillator and injection coupling description.

    f_free and f_inj are absolute frequencies in Hz; the detuning delta_f0 is
    always their difference, never stored separately. kappa0 converts injected
    power to coupling (Hz per sqrt(mW)); freq_noise_psd is a one-sided white
    frequency-noise level in Hz^2/Hz; amplitude is the fixed limit-cycle
    amplitude (pulling proceeds at nearly constant amplitude).
    """

    f_free: float
    f_inj: float
    kappa0: float
    freq_noise_psd: float = 0.0
    amplitude: float = 1.0

    def __post_init__(self) -> None:
        if self.kappa0 < 0:
            raise DataError(f"kappa0 must be >= 0, got {self.kappa0}")
        if self.freq_noise_psd < 0:
            raise DataError(
                f"freq_noise_psd must be >= 0, got {self.freq_noise_psd}"
            )
        if not self.amplitude > 0:
            raise DataError(f"amplitude must be > 0, got {self.amplitude}")

    @property
    def delta_f0(self) -> float:
        """Free-running detuning f_free - f_inj in Hz (derived)."""
        return self.f_free - self.f_inj

    @classmethod
    def from_detuning(
        cls,
        delta_f0: float,
        f_inj: float = 5.489e9,
        kappa0: float = 0.0,
        freq_noise_psd: float = 0.0,
        amplitude: float = 1.0,
    ) -> "OscillatorParams":
        """Build params from a detuning by placing f_free at f_inj + delta_f0."""
        return cls(
            f_free=f_inj + delta_f0,
            f_inj=f_inj,
            kappa0=kappa0,
            freq_noise_psd=freq_noise_psd,
            amplitude=amplitude,
        )


@dataclass(frozen=True)
class SoftPullModel:
    """Phenomenological softened pulling law delta_f0 / sqrt(1 + beta*P)."""

    delta_f0: float
    beta: float

    def __post_init__(self) -> None:
        if not self.beta > 0:
            raise DataError(f"beta must be > 0, got {self.beta}")


@dataclass(frozen=True)
class AdlerTrajectory:
    """Uniformly sampled phase path phi(t) in radians."""

    dt: float
    phi: np.ndarray
    t0: float = 0.0

    def __post_init__(self) -> None:
        phi = np.asarray(self.phi, dtype=float)
        if not self.dt > 0:
            raise DataError(f"dt must be positive, got {self.dt}")
        if phi.ndim != 1 or phi.size < 2:
            raise DataError("phi must be a 1-D array of length >= 2")
        if not np.all(np.isfinite(phi)):
            raise DataError("phi must be finite")
        object.__setattr__(self, "phi", phi)

    def times(self) -> np.ndarray:
        return self.t0 + np.arange(self.phi.size) * self.dt


def kappa_from_power(kappa0: float, p_inj_dbm: float) -> float:
    """Injection coupling in Hz at a given injected power in dBm.

    Scales with the injected field amplitude: kappa0 * sqrt(P_mW).
    """
    if kappa0 < 0:
        raise DataError(f"kappa0 must be >= 0, got {kappa0}")
    return kappa0 * math.sqrt(dbm_to_mw(p_inj_dbm))


def integrate_adler(
    params: OscillatorParams,
    p_inj_dbm: float,
    duration: float,
    dt: float,
    seed: int = 0,
    phi0: float = 0.0,
) -> AdlerTrajectory:
    """Integrate the Adler phase equation over the stated duration.

    Deterministic part uses classical fixed-step 4th-order stepping; with
    freq_noise_psd > 0 an explicit first-order scheme adds white angular
    frequency noise increments sigma*sqrt(dt), sigma^2 = (2*pi)^2 * PSD / 2.
    Reproducible for a given seed. The step must resolve the fastest rate:
    dt * max(|dw0|, kappa_ang) < 0.1 rad, else the input is rejected
    (a coarser step aliases the sine nonlinearity silently).
    """
    if dt <= 0:
        raise DataError(f"dt must be positive, got {dt}")
    dw0 = 2.0 * math.pi * params.delta_f0
    kappa_ang = 2.0 * math.pi * kappa_from_power(params.kappa0, p_inj_dbm)
    rate = max(abs(dw0), kappa_ang)
    if dt * rate >= STEP_BOUND_RAD:
        raise DataError(
            f"step too coarse: dt*max(|dw0|, kappa_ang) = {dt * rate:.3g} rad "
            f">= {STEP_BOUND_RAD} (dt = {dt:.3g} s); reduce dt"
        )
    n_steps = int(round(duration / dt))
    if n_steps < 1:
        raise DataError(
            f"duration {duration} s is shorter than one step of {dt} s"
        )
    out = np.empty(n_steps + 1)
    out[0] = phi0
    phi = float(phi0)
    sin = math.sin
    if params.freq_noise_psd > 0:
        sigma = 2.0 * math.pi * math.sqrt(params.freq_noise_psd / 2.0)
        rng = np.random.default_rng(seed)
        kicks = rng.standard_normal(n_steps) * (sigma * math.sqrt(dt))
        for i in range(n_steps):
            phi += (dw0 - kappa_ang * sin(phi)) * dt + kicks[i]
            out[i + 1] = phi
    else:
        half = dt / 2.0
        sixth = dt / 6.0
        for i in range(n_steps):
            k1 = dw0 - kappa_ang * sin(phi)
            k2 = dw0 - kappa_ang * sin(phi + half * k1)
            k3 = dw0 - kappa_ang * sin(phi + half * k2)
            k4 = dw0 - kappa_ang * sin(phi + dt * k3)
            phi += sixth * (k1 + 2.0 * (k2 + k3) + k4)
            out[i + 1] = phi
    return AdlerTrajectory(dt=dt, phi=out)


def beat_frequency_analytic(delta_f0: float, kappa: float) -> float:
    """Closed-form beat frequency of the pulled oscillator in Hz.

    sqrt(delta_f0^2 - kappa^2) below the locking threshold, 0 once the
    coupling reaches the detuning (synchronized).
    """
    if kappa < abs(delta_f0):
        return math.sqrt(delta_f0 * delta_f0 - kappa * kappa)
    return 0.0


def measure_beat_frequency(
    traj: AdlerTrajectory, transient_fraction: float = 0.1
) -> float:
    """Mean beat frequency of a phase trajectory, in Hz, signed by direction.

    Counts 2*pi crossings of the (already continuous) phase after discarding
    the leading transient fraction and averages over the complete periods
    between the first and last crossing, locating each crossing by linear
    interpolation. With fewer than two crossings the mean phase slope over
    the window is returned instead (near zero for a locked oscillator).
    """
    if not 0 <= transient_fraction < 1:
        raise DataError(
            f"transient_fraction must be in [0, 1), got {transient_fraction}"
        )
    i0 = int(transient_fraction * traj.phi.size)
    phi = traj.phi[i0:]
    t = traj.t0 + (i0 + np.arange(phi.size)) * traj.dt
    total = phi[-1] - phi[0]
    sign = 1.0 if total >= 0 else -1.0
    # progress coordinate, monotone by construction so crossings are unique
    s = np.maximum.accumulate(sign * (phi - phi[0]))
    n_cross = int(s[-1] // (2.0 * math.pi))
    if n_cross < 2:
        span = t[-1] - t[0]
        return total / (2.0 * math.pi * span) if span > 0 else 0.0
    levels = 2.0 * math.pi * np.arange(1, n_cross + 1)
    crossing_times = np.interp(levels, s, t)
    return sign * (n_cross - 1) / (crossing_times[-1] - crossing_times[0])


def pulled_detuning_soft(model: SoftPullModel, p_inj_mw):
    """Softened pulling law delta_f0 / sqrt(1 + beta*P) at linear power P (mW)."""
    p = np.asarray(p_inj_mw, dtype=float)
    if np.any(p < 0):
        raise DataError("p_inj_mw must be >= 0")
    out = model.delta_f0 / np.sqrt(1.0 + model.beta * p)
    return float(out) if out.ndim == 0 else out


def responsivity_analytic(model: SoftPullModel, p_dbm):
    """|d(delta_f)/dP_dB| of the softened law at power p_dbm, in Hz per dB."""
    p_mw = np.asarray(dbm_to_mw(p_dbm))
    out = (
        abs(model.delta_f0)
        * model.beta
        * p_mw
        * (math.log(10.0) / 20.0)
        * (1.0 + model.beta * p_mw) ** -1.5
    )
    return float(out) if out.ndim == 0 else out


def synthesize_baseband(
    params: OscillatorParams, traj: AdlerTrajectory
) -> TimeSeries:
    """Complex baseband waveform amplitude * exp(i*phi(t)) at fs = 1/dt.

    In the rotating frame of the injected tone the spectrum peaks at the
    instantaneous pulled detuning; the magnitude is constant by construction.
    """
    samples = params.amplitude * np.exp(1j * traj.phi)
    return TimeSeries(fs=1.0 / traj.dt, samples=samples, t0=traj.t0)
