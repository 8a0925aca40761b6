"""Time-series infrastructure: band-pass filtering, spectrograms, unit helpers.

The band-pass models a 10-250 kHz readout chain; the spectrogram is the
time-frequency observable every downstream analysis consumes.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.signal

from .errors import DataError

DB_FLOOR = -160.0

__all__ = [
    "DB_FLOOR",
    "TimeSeries",
    "Spectrogram",
    "BandpassSpec",
    "bandpass",
    "stft",
    "dbm_to_mw",
    "mw_to_dbm",
]


@dataclass(frozen=True)
class TimeSeries:
    """Uniformly sampled record.

    fs is the sample rate in Hz, samples a 1-D real or complex array, t0 the
    time of the first sample in seconds.
    """

    fs: float
    samples: np.ndarray
    t0: float = 0.0

    def __post_init__(self) -> None:
        samples = np.asarray(self.samples)
        if samples.ndim != 1 or samples.size == 0:
            raise DataError("samples must be a non-empty 1-D array")
        if not self.fs > 0:
            raise DataError(f"fs must be positive, got {self.fs}")
        if not np.all(np.isfinite(samples.real)) or not np.all(
            np.isfinite(samples.imag)
        ):
            raise DataError("samples must be finite")
        object.__setattr__(self, "samples", samples)

    @property
    def duration(self) -> float:
        return self.samples.size / self.fs

    def times(self) -> np.ndarray:
        return self.t0 + np.arange(self.samples.size) / self.fs


@dataclass(frozen=True)
class Spectrogram:
    """Power matrix in dB over a time axis (columns) and frequency axis (rows)."""

    time_axis: np.ndarray
    freq_axis: np.ndarray
    power_db: np.ndarray

    def __post_init__(self) -> None:
        t = np.asarray(self.time_axis, dtype=float)
        f = np.asarray(self.freq_axis, dtype=float)
        p = np.asarray(self.power_db, dtype=float)
        if t.ndim != 1 or f.ndim != 1:
            raise DataError("axes must be 1-D")
        if np.any(np.diff(t) <= 0) or np.any(np.diff(f) <= 0):
            raise DataError("axes must be strictly increasing")
        if p.shape != (f.size, t.size):
            raise DataError(
                f"power_db shape {p.shape} does not match "
                f"(freq={f.size}, time={t.size})"
            )
        if not np.all(np.isfinite(p)):
            raise DataError("power_db must be finite")
        object.__setattr__(self, "time_axis", t)
        object.__setattr__(self, "freq_axis", f)
        object.__setattr__(self, "power_db", p)


@dataclass(frozen=True)
class BandpassSpec:
    """Band edges and total IIR order of the readout band-pass.

    The stated 3 dB passband refers to a single filter pass; bandpass()
    applies the filter forward and backward, so the edges sit 6 dB down in
    the delivered record.
    """

    f_lo: float = 10e3
    f_hi: float = 250e3
    order: int = 4

    def __post_init__(self) -> None:
        if not (0 < self.f_lo < self.f_hi):
            raise DataError(
                f"band edges must satisfy 0 < f_lo < f_hi, got "
                f"({self.f_lo}, {self.f_hi})"
            )
        if self.order < 2 or self.order % 2:
            raise DataError(f"order must be an even integer >= 2, got {self.order}")


def bandpass(ts: TimeSeries, spec: BandpassSpec) -> TimeSeries:
    """Zero-phase Butterworth band-pass of a time series.

    The filter is a second-order-section cascade of total order spec.order,
    run forward then backward (no group-delay bias on peak positions).
    """
    if spec.f_hi >= ts.fs / 2:
        raise DataError(
            f"f_hi = {spec.f_hi} Hz must lie below the Nyquist rate "
            f"{ts.fs / 2} Hz"
        )
    # scipy's N counts pole pairs for a band-pass: total order = 2 N
    sos = scipy.signal.butter(
        spec.order // 2, [spec.f_lo, spec.f_hi], btype="bandpass", fs=ts.fs,
        output="sos",
    )
    filtered = scipy.signal.sosfiltfilt(sos, ts.samples)
    return TimeSeries(fs=ts.fs, samples=filtered, t0=ts.t0)


def _hann(n: int) -> np.ndarray:
    # periodic form: sums to exactly n/2, exact 0 dB for an on-bin tone
    return 0.5 - 0.5 * np.cos(2.0 * np.pi * np.arange(n) / n)


def stft(ts: TimeSeries, window_len: int = 4096, hop: int = 1024) -> Spectrogram:
    """Hann-windowed short-time Fourier transform as a two-sided spectrogram.

    Power is normalized so a unit-amplitude complex exponential on a bin
    reads 0 dB there; values are clamped at DB_FLOOR. Column times are the
    window centers. Only complete frames are transformed.
    """
    if window_len < 16 or window_len & (window_len - 1):
        raise DataError(
            f"window_len must be a power of two >= 16, got {window_len}"
        )
    if not 0 < hop <= window_len:
        raise DataError(f"hop must be in (0, window_len], got {hop}")
    x = ts.samples
    if x.size < window_len:
        raise DataError(
            f"record of {x.size} samples is shorter than one window "
            f"({window_len})"
        )
    window = _hann(window_len)
    frames = np.lib.stride_tricks.sliding_window_view(x, window_len)[::hop]
    spectra = np.fft.fft(frames * window, axis=1)
    power = np.abs(spectra) ** 2 / np.sum(window) ** 2
    power_db = 10.0 * np.log10(np.maximum(power, 10.0 ** (DB_FLOOR / 10.0)))
    power_db = np.fft.fftshift(power_db, axes=1).T
    freq_axis = np.fft.fftshift(np.fft.fftfreq(window_len, d=1.0 / ts.fs))
    starts = np.arange(frames.shape[0]) * hop
    time_axis = ts.t0 + (starts + window_len / 2) / ts.fs
    return Spectrogram(time_axis=time_axis, freq_axis=freq_axis, power_db=power_db)


def dbm_to_mw(p_dbm):
    """Power in dBm to linear milliwatts."""
    out = 10.0 ** (np.asarray(p_dbm, dtype=float) / 10.0)
    return float(out) if out.ndim == 0 else out


def mw_to_dbm(p_mw):
    """Power in milliwatts to dBm; rejects nonpositive input."""
    p = np.asarray(p_mw, dtype=float)
    if np.any(p <= 0):
        raise DataError("power in mW must be positive to convert to dBm")
    out = 10.0 * np.log10(p)
    return float(out) if out.ndim == 0 else out
