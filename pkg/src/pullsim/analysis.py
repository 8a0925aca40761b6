"""Observable extraction from IF spectrograms.

Turns spectrogram columns into dominant-peak tracks with 3 dB linewidths,
fits the softened pulling law to a track by damped least squares, and
differentiates a track numerically to get the frequency responsivity in
Hz per dB of injected power.
"""

from __future__ import annotations

import dataclasses
import math
from typing import NamedTuple

import numpy as np

from .errors import DataError
from .signal import Spectrogram, dbm_to_mw, mw_to_dbm

__all__ = [
    "PeakEstimate",
    "PeakTrack",
    "AdlerFit",
    "ResponsivityCurve",
    "extract_peak",
    "track_peaks",
    "fit_adler_model",
    "responsivity_numeric",
]

# Fitted beta is optimized in log space; this floor keeps the flat-track
# degenerate limit finite instead of running to -inf.
BETA_FLOOR = 1e-12

# A column whose in-band maximum sits within this many dB of the synthesis
# floor, or this far below the column's own global maximum, carries no
# credible tone and is marked invalid rather than tracked.
_VALID_ABOVE_FLOOR_DB = 20.0
_VALID_BELOW_GLOBAL_DB = 30.0


class PeakEstimate(NamedTuple):
    """Result of a single-column peak extraction."""

    f_peak: float
    linewidth_3db: float
    clamped: bool


class ResponsivityCurve(NamedTuple):
    """Numeric responsivity sampled on the track's power axis."""

    p_inj_dbm: np.ndarray
    responsivity_hz_per_db: np.ndarray


@dataclasses.dataclass(frozen=True)
class PeakTrack:
    """Dominant-tone frequency versus injected power.

    ``valid`` marks steps whose spectrum held a credible in-band tone;
    ``clamped`` marks steps whose 3 dB width ran into a band edge.
    """

    p_inj_dbm: np.ndarray
    f_peak: np.ndarray
    linewidth_3db: np.ndarray
    valid: np.ndarray = None
    clamped: np.ndarray = None

    def __post_init__(self):
        p = np.asarray(self.p_inj_dbm, dtype=float)
        f = np.asarray(self.f_peak, dtype=float)
        w = np.asarray(self.linewidth_3db, dtype=float)
        if not (p.ndim == f.ndim == w.ndim == 1):
            raise DataError("track arrays must be one-dimensional")
        if not (p.size == f.size == w.size):
            raise DataError("track arrays must share a common length")
        if p.size and not np.all(np.diff(p) > 0):
            raise DataError("power axis must be strictly increasing")
        if not (np.all(np.isfinite(p)) and np.all(np.isfinite(f)) and np.all(np.isfinite(w))):
            raise DataError("track arrays must be finite")
        if np.any(w <= 0):
            raise DataError("linewidths must be positive")
        valid = self.valid
        valid = np.ones(p.size, dtype=bool) if valid is None else np.asarray(valid, dtype=bool)
        clamped = self.clamped
        clamped = np.zeros(p.size, dtype=bool) if clamped is None else np.asarray(clamped, dtype=bool)
        if valid.shape != p.shape or clamped.shape != p.shape:
            raise DataError("flag arrays must match the power axis length")
        object.__setattr__(self, "p_inj_dbm", p)
        object.__setattr__(self, "f_peak", f)
        object.__setattr__(self, "linewidth_3db", w)
        object.__setattr__(self, "valid", valid)
        object.__setattr__(self, "clamped", clamped)

    def __len__(self) -> int:
        return self.p_inj_dbm.size

    def valid_subset(self) -> "PeakTrack":
        """Return the track restricted to its valid steps."""
        m = self.valid
        return PeakTrack(
            p_inj_dbm=self.p_inj_dbm[m],
            f_peak=self.f_peak[m],
            linewidth_3db=self.linewidth_3db[m],
            valid=np.ones(int(m.sum()), dtype=bool),
            clamped=self.clamped[m],
        )


@dataclasses.dataclass(frozen=True)
class AdlerFit:
    """Damped least-squares fit of the softened pulling law to a track."""

    delta_f0_hat: float
    beta_hat: float
    covariance: np.ndarray
    residual_rms: float
    n_iterations: int
    converged: bool
    beta_at_bound: bool
    cost_history: np.ndarray

    def __post_init__(self):
        cov = np.asarray(self.covariance, dtype=float)
        if cov.shape != (2, 2):
            raise DataError("covariance must be 2x2")
        object.__setattr__(self, "covariance", cov)
        object.__setattr__(self, "cost_history", np.asarray(self.cost_history, dtype=float))

    def model(self, p_inj_dbm: np.ndarray) -> np.ndarray:
        """Evaluate the fitted law on a dBm axis."""
        p_mw = dbm_to_mw(np.asarray(p_inj_dbm, dtype=float))
        return self.delta_f0_hat / np.sqrt(1.0 + self.beta_hat * p_mw)


def _band_bins(freq_axis: np.ndarray, band) -> np.ndarray:
    lo, hi = float(band[0]), float(band[1])
    if not (math.isfinite(lo) and math.isfinite(hi)) or hi <= lo:
        raise DataError("band must be a finite (low, high) pair with low < high")
    if lo < freq_axis[0] - 1e-9 or hi > freq_axis[-1] + 1e-9:
        raise DataError(
            f"band ({lo:g}, {hi:g}) Hz lies outside the frequency axis "
            f"[{freq_axis[0]:g}, {freq_axis[-1]:g}] Hz"
        )
    idx = np.nonzero((freq_axis >= lo) & (freq_axis <= hi))[0]
    if idx.size < 5:
        raise DataError(f"band ({lo:g}, {hi:g}) Hz must cover at least 5 frequency bins")
    return idx


def extract_peak(spectrum_db: np.ndarray, freq_axis: np.ndarray, band) -> PeakEstimate:
    """Locate the dominant in-band tone and its 3 dB linewidth.

    The dominant bin inside ``band`` is refined by a three-point parabola
    on the dB values; the linewidth is the spacing of the two points 3 dB
    below the refined apex, each found by linear interpolation between
    bins.  A crossing that runs off the band is clamped to the band edge
    and flagged.

    Parameters
    ----------
    spectrum_db : 1-D array of dB values, one per frequency bin.
    freq_axis : 1-D array of bin frequencies in Hz, strictly increasing.
    band : (low, high) search interval in Hz, at least 5 bins wide.
    """
    s = np.asarray(spectrum_db, dtype=float)
    f = np.asarray(freq_axis, dtype=float)
    if s.ndim != 1 or f.ndim != 1 or s.size != f.size:
        raise DataError("spectrum and frequency axis must be 1-D arrays of equal length")
    if f.size < 2 or not np.all(np.diff(f) > 0):
        raise DataError("frequency axis must be strictly increasing")
    idx = _band_bins(f, band)
    k = idx[int(np.argmax(s[idx]))]

    # Parabolic refinement on dB values; neighbors may sit just outside the
    # band but must sit on the axis.
    if 0 < k < f.size - 1:
        a, b, c = s[k - 1], s[k], s[k + 1]
        denom = a - 2.0 * b + c
        delta = 0.0 if denom >= -1e-300 else 0.5 * (a - c) / denom
        delta = float(np.clip(delta, -0.5, 0.5))
        apex_db = b - 0.25 * (a - c) * delta
    else:
        delta = 0.0
        apex_db = s[k]
    df_bin = f[min(k + 1, f.size - 1)] - f[min(k + 1, f.size - 1) - 1]
    f_peak = float(f[k] + delta * df_bin)
    f_peak = float(np.clip(f_peak, band[0], band[1]))

    thresh = apex_db - 3.0
    lo_i, hi_i = idx[0], idx[-1]
    clamped = False

    # Walk left from the peak bin to the first bin at or below threshold.
    j = k
    while j > lo_i and s[j - 1] > thresh:
        j -= 1
    if j == lo_i and s[lo_i] > thresh:
        left = float(f[lo_i])
        clamped = True
    elif s[j] <= thresh:
        left = float(f[j])
    else:
        left = float(np.interp(thresh, [s[j - 1], s[j]], [f[j - 1], f[j]]))

    j = k
    while j < hi_i and s[j + 1] > thresh:
        j += 1
    if j == hi_i and s[hi_i] > thresh:
        right = float(f[hi_i])
        clamped = True
    elif s[j] <= thresh:
        right = float(f[j])
    else:
        right = float(np.interp(thresh, [s[j + 1], s[j]], [f[j + 1], f[j]]))

    width = max(right - left, 1e-300)
    return PeakEstimate(f_peak=f_peak, linewidth_3db=width, clamped=clamped)


def track_peaks(spg: Spectrogram, schedule: np.ndarray, band) -> PeakTrack:
    """Extract one peak per power step of a swept spectrogram.

    ``schedule`` assigns an injected power in dBm to every spectrogram
    column; columns sharing a power are averaged in linear power before
    extraction and the output is ordered by increasing power.  Steps whose
    averaged column shows no credible in-band tone are marked invalid.
    """
    sched = np.asarray(schedule, dtype=float)
    if sched.ndim != 1 or sched.size != spg.time_axis.size:
        raise DataError("schedule must assign one power to each spectrogram column")
    if sched.size == 0:
        raise DataError("schedule must be non-empty")

    powers = np.unique(sched)
    freq = spg.freq_axis
    idx = _band_bins(freq, band)
    floor_db = float(np.min(spg.power_db))

    f_peak = np.empty(powers.size)
    width = np.empty(powers.size)
    valid = np.empty(powers.size, dtype=bool)
    clamped = np.empty(powers.size, dtype=bool)
    for i, p in enumerate(powers):
        cols = spg.power_db[:, sched == p]
        # average in linear power, then back to dB
        col_db = 10.0 * np.log10(np.mean(10.0 ** (cols / 10.0), axis=1))
        est = extract_peak(col_db, freq, band)
        in_band_max = float(np.max(col_db[idx]))
        global_max = float(np.max(col_db))
        f_peak[i] = est.f_peak
        width[i] = est.linewidth_3db
        clamped[i] = est.clamped
        valid[i] = (in_band_max >= floor_db + _VALID_ABOVE_FLOOR_DB) and (
            in_band_max >= global_max - _VALID_BELOW_GLOBAL_DB
        )
    return PeakTrack(p_inj_dbm=powers, f_peak=f_peak, linewidth_3db=width,
                     valid=valid, clamped=clamped)


def _soft_model(u: np.ndarray, p_mw: np.ndarray) -> np.ndarray:
    df0, beta = math.exp(u[0]), math.exp(u[1])
    return df0 / np.sqrt(1.0 + beta * p_mw)


def _soft_jacobian(u: np.ndarray, p_mw: np.ndarray) -> np.ndarray:
    # columns: dm/d(ln df0), dm/d(ln beta)
    beta = math.exp(u[1])
    m = _soft_model(u, p_mw)
    x = beta * p_mw
    return np.column_stack([m, -0.5 * m * x / (1.0 + x)])


def fit_adler_model(track: PeakTrack, linewidth_weighted: bool = False) -> AdlerFit:
    """Fit the softened pulling law to a peak track.

    Minimizes the sum of squared frequency residuals by damped least
    squares with adaptive damping, optimizing ``ln(delta_f0)`` and
    ``ln(beta)`` so both parameters stay positive.  With
    ``linewidth_weighted`` each residual is weighted by 1/linewidth^2.

    Returns an :class:`AdlerFit`; non-convergence is reported through the
    ``converged`` flag rather than an exception.
    """
    if len(track) < 5:
        raise DataError("fit requires at least 5 track points")
    p_mw = dbm_to_mw(track.p_inj_dbm)
    y = track.f_peak
    if np.any(y <= 0):
        raise DataError("fit requires positive beat frequencies")
    sw = 1.0 / track.linewidth_3db if linewidth_weighted else np.ones_like(y)

    df0_init = float(y[0])
    below = np.nonzero(y < 0.5 * df0_init)[0]
    p_half = float(p_mw[below[0]]) if below.size else float(p_mw[-1])
    u = np.array([math.log(df0_init), math.log(3.0 / p_half)])

    def cost(uv):
        r = (y - _soft_model(uv, p_mw)) * sw
        return float(r @ r)

    lam = 1e-3
    c = cost(u)
    history = [c]
    n_iter = 0
    converged = False
    log_floor = math.log(BETA_FLOOR)
    for n_iter in range(1, 201):
        r = (y - _soft_model(u, p_mw)) * sw
        jac = _soft_jacobian(u, p_mw) * sw[:, None]
        jtj = jac.T @ jac
        jtr = jac.T @ r
        try:
            step = np.linalg.solve(jtj + lam * np.diag(np.diag(jtj)), jtr)
        except np.linalg.LinAlgError:
            lam = min(lam * 10.0, 1e12)
            continue
        u_new = u + step
        u_new[1] = max(u_new[1], log_floor)
        c_new = cost(u_new)
        if c_new <= c:
            rel = abs(c - c_new) / max(c, 1e-300)
            u, c = u_new, c_new
            history.append(c)
            lam = max(lam * 0.1, 1e-12)
            if rel < 1e-10:
                converged = True
                break
        else:
            lam = min(lam * 10.0, 1e12)

    df0_hat, beta_hat = math.exp(u[0]), math.exp(u[1])
    resid = y - _soft_model(u, p_mw)
    dof = max(len(track) - 2, 1)
    sigma2 = float((resid * sw) @ (resid * sw)) / dof
    # covariance in natural parameters from the Gauss-Newton normal matrix
    m = _soft_model(u, p_mw)
    x = beta_hat * p_mw
    j_nat = np.column_stack([m / df0_hat, -0.5 * m / beta_hat * x / (1.0 + x)]) * sw[:, None]
    cov = sigma2 * np.linalg.pinv(j_nat.T @ j_nat)
    cov = 0.5 * (cov + cov.T)
    return AdlerFit(
        delta_f0_hat=df0_hat,
        beta_hat=beta_hat,
        covariance=cov,
        residual_rms=float(np.sqrt(np.mean(resid**2))),
        n_iterations=n_iter,
        converged=converged,
        beta_at_bound=beta_hat <= 10.0 * BETA_FLOOR,
        cost_history=np.asarray(history),
    )


def responsivity_numeric(track: PeakTrack) -> ResponsivityCurve:
    """Differentiate a track numerically: |df_peak/dP| in Hz per dB.

    Central finite differences in the interior, one-sided at the ends;
    the output axis matches the track's power axis point for point.
    """
    if len(track) < 3:
        raise DataError("responsivity requires at least 3 track points")
    p = track.p_inj_dbm
    d = np.diff(p)
    if np.any(d == 0) or not (np.all(d > 0) or np.all(d < 0)):
        raise DataError("power axis must be strictly monotone without duplicates")
    resp = np.abs(np.gradient(track.f_peak, p))
    return ResponsivityCurve(p_inj_dbm=p.copy(), responsivity_hz_per_db=resp)
