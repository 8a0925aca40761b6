"""Four-level cesium ladder readout of the microwave field.

A weak 852 nm probe (level 1 to 2), a 510 nm coupling beam (2 to 3), and an
RF field on the Rydberg transition (3 to 4) form a cascade whose probe
susceptibility carries the RF Rabi frequency. The module provides the
first-order weak-probe coherence chain, a full steady-state master-equation
oracle for it, Beer-Lambert transmission, and quasi-static synthesis of the
photodetector intermediate-frequency record when a strong local-oscillator
field beats with a weak signal field on that transition.

The model treats a single velocity class (no Doppler averaging), which
changes quantitative lineshapes of a warm vapor but not the position of the
beat peak that downstream analysis tracks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Union

import numpy as np

from .errors import ConvergenceError, DataError
from .oscillator import AdlerTrajectory
from .signal import TimeSeries

__all__ = [
    "LadderSystem",
    "DriveFields",
    "RfScene",
    "cesium_defaults",
    "weak_probe_coherence",
    "lindblad_steady_state",
    "probe_transmission",
    "if_photodetector_signal",
    "autler_townes_splitting",
]


@dataclass(frozen=True)
class LadderSystem:
    """Rates of the four-level cascade, all in rad/s.

    gamma2/gamma3/gamma4 are the total decay rates of the probe, two-photon,
    and three-photon coherences (half the population decay plus pure
    dephasing); Gamma2/Gamma3/Gamma4 are the population decay rates of levels
    2-4, used by the master-equation oracle. optical_depth is the peak
    two-level optical depth of the cell.
    """

    gamma2: float
    gamma3: float
    gamma4: float
    Gamma2: float
    Gamma3: float
    Gamma4: float
    optical_depth: float = 1.0

    def __post_init__(self) -> None:
        for name in ("gamma2", "gamma3", "gamma4", "Gamma2", "Gamma3", "Gamma4"):
            if not getattr(self, name) > 0:
                raise DataError(f"{name} must be > 0, got {getattr(self, name)}")
        for k in (2, 3, 4):
            coh = getattr(self, f"gamma{k}")
            pop = getattr(self, f"Gamma{k}")
            if coh < pop / 2:
                raise DataError(
                    f"gamma{k} = {coh} violates gamma{k} >= Gamma{k}/2 "
                    f"(Gamma{k} = {pop})"
                )
        if self.optical_depth < 0:
            raise DataError(
                f"optical_depth must be >= 0, got {self.optical_depth}"
            )


def cesium_defaults(optical_depth: float = 1.0) -> LadderSystem:
    """Order-of-magnitude realistic cesium rates.

    D2 population decay 2*pi*5.2 MHz, slow Rydberg decay 2*pi*1 kHz on the
    upper two levels, and 2*pi*100 kHz pure dephasing on the two- and
    three-photon coherences standing in for transit and laser linewidth.
    """
    Gamma2 = 2 * math.pi * 5.2e6
    Gamma3 = 2 * math.pi * 1e3
    Gamma4 = 2 * math.pi * 1e3
    dephasing = 2 * math.pi * 100e3
    return LadderSystem(
        gamma2=Gamma2 / 2,
        gamma3=Gamma3 / 2 + dephasing,
        gamma4=Gamma4 / 2 + dephasing,
        Gamma2=Gamma2,
        Gamma3=Gamma3,
        Gamma4=Gamma4,
        optical_depth=optical_depth,
    )


@dataclass(frozen=True)
class DriveFields:
    """Rabi frequencies and detunings of the three drives, in rad/s.

    Fields may be scalars or mutually broadcastable numpy arrays; array
    inputs vectorize weak_probe_coherence over the grid.
    """

    omega_p: float
    omega_c: float
    omega_rf: float
    delta_p: float = 0.0
    delta_c: float = 0.0
    delta_rf: float = 0.0

    def __post_init__(self) -> None:
        for name in ("omega_p", "omega_c", "omega_rf"):
            if np.any(np.asarray(getattr(self, name)) < 0):
                raise DataError(f"{name} must be >= 0")


@dataclass(frozen=True)
class RfScene:
    """RF fields at the cell: local oscillator plus weak signal.

    omega_lo and omega_sig are Rabi amplitudes (rad/s); phi_lo supplies the
    local-oscillator phase path, either as a phase trajectory sampled on the
    photodetector grid or as a callable of time; delta_sig is the signal
    tone's detuning from the atomic transition (0 for an on-resonant signal).
    With track_lo_detuning the instantaneous local-oscillator frequency is
    added to the RF detuning per sample, exposing the susceptibility's
    detuning dependence instead of holding the dressing response fixed.
    """

    omega_lo: float
    omega_sig: float
    phi_lo: Union[AdlerTrajectory, Callable[[np.ndarray], np.ndarray]]
    delta_sig: float = 0.0
    track_lo_detuning: bool = False

    def __post_init__(self) -> None:
        if self.omega_lo < 0 or self.omega_sig < 0:
            raise DataError("omega_lo and omega_sig must be >= 0")


def weak_probe_coherence(system: LadderSystem, fields: DriveFields):
    """First-order probe coherence rho21 of the dressed cascade.

    Valid for a weak probe (first order in omega_p); the imaginary part is
    the absorptive quadrature and is nonnegative. Broadcasts over array
    fields.
    """
    d_p = np.asarray(fields.delta_p)
    d_2 = d_p + np.asarray(fields.delta_c)
    d_3 = d_2 + np.asarray(fields.delta_rf)
    term4 = system.gamma4 - 1j * d_3
    term3 = system.gamma3 - 1j * d_2 + (np.asarray(fields.omega_rf) ** 2 / 4.0) / term4
    term2 = system.gamma2 - 1j * d_p + (np.asarray(fields.omega_c) ** 2 / 4.0) / term3
    rho21 = (1j * np.asarray(fields.omega_p) / 2.0) / term2
    return complex(rho21) if rho21.ndim == 0 else rho21


def _liouvillian(system: LadderSystem, fields: DriveFields) -> np.ndarray:
    # phase gauge with -omega/2 couplings and -cumulative detunings keeps the
    # steady-state rho21 in the same (+i, absorptive) convention as the chain
    # formula; populations are gauge independent
    d_p = fields.delta_p
    d_2 = d_p + fields.delta_c
    d_3 = d_2 + fields.delta_rf
    h = np.zeros((4, 4), dtype=complex)
    h[1, 1] = -d_p
    h[2, 2] = -d_2
    h[3, 3] = -d_3
    h[0, 1] = h[1, 0] = -fields.omega_p / 2.0
    h[1, 2] = h[2, 1] = -fields.omega_c / 2.0
    h[2, 3] = h[3, 2] = -fields.omega_rf / 2.0

    eye = np.eye(4, dtype=complex)
    lv = -1j * (np.kron(h, eye) - np.kron(eye, h.T))

    collapse = []
    for upper, rate in ((1, system.Gamma2), (2, system.Gamma3), (3, system.Gamma4)):
        c = np.zeros((4, 4), dtype=complex)
        c[upper - 1, upper] = math.sqrt(rate)
        collapse.append(c)
    for level in (2, 3, 4):
        dephasing = getattr(system, f"gamma{level}") - getattr(
            system, f"Gamma{level}"
        ) / 2.0
        if dephasing > 0:
            c = np.zeros((4, 4), dtype=complex)
            c[level - 1, level - 1] = math.sqrt(2.0 * dephasing)
            collapse.append(c)
    for c in collapse:
        cdc = c.conj().T @ c
        lv += (
            np.kron(c, c.conj())
            - 0.5 * np.kron(cdc, eye)
            - 0.5 * np.kron(eye, cdc.T)
        )
    return lv


def lindblad_steady_state(system: LadderSystem, fields: DriveFields) -> np.ndarray:
    """Steady-state 4x4 density matrix of the driven cascade.

    Solves L vec(rho) = 0 with the trace-one constraint replacing the first
    row of the 16x16 Liouvillian. Serves as the validation oracle for
    weak_probe_coherence; requires scalar fields.
    """
    lv = _liouvillian(system, fields)
    lv[0, :] = 0.0
    lv[0, [0, 5, 10, 15]] = 1.0  # row-major diagonal entries: trace(rho) = 1
    rhs = np.zeros(16, dtype=complex)
    rhs[0] = 1.0
    try:
        vec = np.linalg.solve(lv, rhs)
    except np.linalg.LinAlgError as exc:
        raise ConvergenceError(
            "Liouvillian is singular beyond the trace degeneracy; "
            "check the rate inputs"
        ) from exc
    rho = vec.reshape(4, 4)
    return 0.5 * (rho + rho.conj().T)


def probe_transmission(rho21_imag_scaled, system: LadderSystem):
    """Beer-Lambert transmission from the normalized absorptive quadrature.

    The input is Im rho21 normalized to the resonant two-level value
    omega_p / (2 gamma2), so 1.0 maps to exp(-optical_depth) and 0 to full
    transparency.
    """
    out = np.exp(-system.optical_depth * np.asarray(rho21_imag_scaled, dtype=float))
    return float(out) if out.ndim == 0 else out


def _phase_samples(scene: RfScene, t: np.ndarray, fs: float, n: int) -> np.ndarray:
    phi_lo = scene.phi_lo
    if callable(phi_lo):
        return np.asarray(phi_lo(t), dtype=float)
    if abs(phi_lo.dt * fs - 1.0) > 1e-9:
        raise DataError(
            f"phase trajectory step {phi_lo.dt} s does not match the "
            f"photodetector grid 1/fs = {1.0 / fs} s"
        )
    if phi_lo.phi.size < n:
        raise DataError(
            f"phase trajectory has {phi_lo.phi.size} samples, "
            f"need {n} for the requested duration"
        )
    return phi_lo.phi[:n]


def if_photodetector_signal(
    system: LadderSystem,
    fields: DriveFields,
    scene: RfScene,
    fs: float,
    duration: float,
) -> TimeSeries:
    """Mean-subtracted probe-transmission record at the photodetector.

    Each sample sees the steady-state susceptibility at the instantaneous
    composite RF Rabi amplitude |omega_lo e^{i phi_lo} + omega_sig
    e^{i delta_sig t}| (the composite phase is absorbed into the amplitude);
    the record is the Beer-Lambert transmission minus its mean, mimicking a
    balanced, DC-suppressed readout. Valid while all beat content stays slow
    against the probe coherence rate gamma2; the scenario layer checks that
    at configuration time. The finite two-photon coherence rate low-passes
    response amplitudes near the top of the band but does not move the beat
    peak.
    """
    if fs <= 0:
        raise DataError(f"fs must be positive, got {fs}")
    if np.asarray(fields.omega_p).ndim or not fields.omega_p > 0:
        raise DataError("omega_p must be a positive scalar for IF synthesis")
    n = int(round(fs * duration))
    if n < 2:
        raise DataError(f"duration {duration} s yields fewer than 2 samples")
    t0 = 0.0 if callable(scene.phi_lo) else scene.phi_lo.t0
    t = t0 + np.arange(n) / fs
    phi = _phase_samples(scene, t, fs, n)
    composite = scene.omega_lo * np.exp(1j * phi) + scene.omega_sig * np.exp(
        1j * scene.delta_sig * t
    )
    omega_rf_t = np.abs(composite)
    delta_rf_t = fields.delta_rf
    if scene.track_lo_detuning:
        delta_rf_t = delta_rf_t + np.gradient(phi, 1.0 / fs)
    rho21 = weak_probe_coherence(
        system,
        DriveFields(
            omega_p=fields.omega_p,
            omega_c=fields.omega_c,
            omega_rf=omega_rf_t,
            delta_p=fields.delta_p,
            delta_c=fields.delta_c,
            delta_rf=delta_rf_t,
        ),
    )
    scale = fields.omega_p / (2.0 * system.gamma2)
    transmission = probe_transmission(np.imag(rho21) / scale, system)
    return TimeSeries(fs=fs, samples=transmission - transmission.mean(), t0=t0)


def autler_townes_splitting(
    system: LadderSystem,
    omega_p: float,
    omega_c: float,
    omega_rf: float,
    span: float | None = None,
    n_points: int = 4001,
) -> float:
    """Separation of the split transparency windows under RF dressing, rad/s.

    Scans the coupling detuning at fixed resonant probe and RF. The single
    transparency window of the undressed cascade splits into two; this
    locates the two deepest local minima of Im rho21 (the transmission
    maxima), refines each by a three-point parabola, and returns their
    separation, which approaches omega_rf for strong dressing.
    """
    if omega_rf <= 0:
        raise DataError("omega_rf must be > 0 to produce a splitting")
    if span is None:
        span = 1.5 * omega_rf
    grid = np.linspace(-span, span, n_points)
    fields = DriveFields(
        omega_p=omega_p, omega_c=omega_c, omega_rf=omega_rf, delta_c=grid
    )
    absorption = np.imag(weak_probe_coherence(system, fields))
    interior = (absorption[1:-1] < absorption[:-2]) & (
        absorption[1:-1] <= absorption[2:]
    )
    notches = np.flatnonzero(interior) + 1
    if notches.size < 2:
        raise ConvergenceError(
            "fewer than two transparency windows found; increase the scan span"
        )
    deepest = notches[np.argsort(absorption[notches])][:2]
    positions = []
    step = grid[1] - grid[0]
    for idx in deepest:
        ym1, y0, yp1 = absorption[idx - 1], absorption[idx], absorption[idx + 1]
        denom = 2.0 * y0 - ym1 - yp1
        offset = 0.5 * (yp1 - ym1) / denom if denom != 0 else 0.0
        positions.append(grid[idx] + offset * step)
    return abs(positions[1] - positions[0])
