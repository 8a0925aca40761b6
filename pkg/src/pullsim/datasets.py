"""CSV serialization for spectrogram matrices, tracks, fits, and curves.

A spectrogram dataset is three files: a matrix whose rows are frequency
bins, plus one single-column axis file per dimension.  The matrix file
opens with an orientation comment so transposed third-party exports fail
loudly; axis files open with a unit-bearing header that is validated on
read.  All writes are atomic (temp file, then rename) and byte-stable:
repeated writes of equal data produce identical files.
"""

from __future__ import annotations

import dataclasses
import os
import tempfile
from typing import Optional

import numpy as np

from .analysis import AdlerFit, PeakTrack, ResponsivityCurve
from .errors import DataError
from .signal import Spectrogram

__all__ = [
    "SpectrogramDataset",
    "read_spectrogram_csv",
    "write_spectrogram_csv",
    "read_track_csv",
    "write_track_csv",
    "read_responsivity_csv",
    "write_responsivity_csv",
    "write_fit_csv",
    "atomic_write",
    "power_averaged_dataset",
]

_FMT = "%.9e"
_MATRIX_HEADERS = {
    "power_dbm": "# rows=frequency_hz columns=power_dbm",
    "time_s": "# rows=frequency_hz columns=time_s",
}
_AXIS_HEADERS = {"frequency_hz", "power_dbm", "time_s"}


@dataclasses.dataclass(frozen=True)
class SpectrogramDataset:
    """Frequency-by-column power matrix with its two axes.

    Exactly one of ``power_axis_dbm`` and ``time_axis_s`` labels the
    columns.  ``metadata`` is free-form and travels in run manifests, not
    in the CSV files themselves.
    """

    power_db: np.ndarray
    freq_axis_hz: np.ndarray
    power_axis_dbm: Optional[np.ndarray] = None
    time_axis_s: Optional[np.ndarray] = None
    metadata: dict = dataclasses.field(default_factory=dict)

    def __post_init__(self) -> None:
        m = np.asarray(self.power_db, dtype=float)
        fa = np.asarray(self.freq_axis_hz, dtype=float)
        if m.ndim != 2:
            raise DataError("power_db must be a 2-D matrix")
        if fa.ndim != 1:
            raise DataError("freq_axis_hz must be a 1-D vector")
        if (self.power_axis_dbm is None) == (self.time_axis_s is None):
            raise DataError(
                "exactly one of power_axis_dbm and time_axis_s must be given"
            )
        ca = np.asarray(self.col_axis, dtype=float)
        if ca.ndim != 1:
            raise DataError("column axis must be a 1-D vector")
        if m.shape != (fa.size, ca.size):
            raise DataError(
                f"matrix shape {m.shape} does not match axes "
                f"({fa.size} frequencies, {ca.size} columns)"
            )
        for name, axis in (("freq_axis_hz", fa), ("column axis", ca)):
            d = np.diff(axis)
            if axis.size > 1 and not (np.all(d > 0) or np.all(d < 0)):
                raise DataError(f"{name} must be strictly monotone")
        if not (np.all(np.isfinite(m)) and np.all(np.isfinite(fa)) and np.all(np.isfinite(ca))):
            raise DataError("dataset values must be finite")
        object.__setattr__(self, "power_db", m)
        object.__setattr__(self, "freq_axis_hz", fa)
        if self.power_axis_dbm is not None:
            object.__setattr__(self, "power_axis_dbm", ca)
        else:
            object.__setattr__(self, "time_axis_s", ca)

    @property
    def col_kind(self) -> str:
        return "power_dbm" if self.power_axis_dbm is not None else "time_s"

    @property
    def col_axis(self) -> np.ndarray:
        return self.power_axis_dbm if self.power_axis_dbm is not None else self.time_axis_s


def atomic_write(path: str, data) -> None:
    mode = "wb" if isinstance(data, bytes) else "w"
    d = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".pullsim-")
    try:
        with os.fdopen(fd, mode) as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _format_row(values) -> str:
    return ",".join(_FMT % v for v in values)


def _parse_float(cell: str, path: str, row: int, col: int) -> float:
    try:
        return float(cell)
    except ValueError:
        raise DataError(
            f"{path}: non-numeric cell {cell!r} at row {row}, column {col}"
        ) from None


def _read_axis(path: str, expect_units) -> tuple:
    with open(path, "r") as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise DataError(f"{path}: empty axis file")
    header = lines[0].strip()
    if header not in _AXIS_HEADERS:
        raise DataError(
            f"{path}: axis header {header!r} is not one of {sorted(_AXIS_HEADERS)}"
        )
    if header not in expect_units:
        raise DataError(
            f"{path}: axis header {header!r}; expected one of {sorted(expect_units)}"
        )
    values = [
        _parse_float(line.strip(), path, i + 2, 1)
        for i, line in enumerate(lines[1:])
        if line.strip()
    ]
    return header, np.asarray(values, dtype=float)


def write_spectrogram_csv(
    ds: SpectrogramDataset, matrix_path: str, freq_path: str, col_path: str
) -> None:
    """Write the three files of a spectrogram dataset.

    Deterministic byte output: %.9e cells, comma separation, newline
    termination, a single orientation comment atop the matrix and a
    single unit header atop each axis file.
    """
    lines = [_MATRIX_HEADERS[ds.col_kind]]
    lines.extend(_format_row(row) for row in ds.power_db)
    atomic_write(matrix_path, "\n".join(lines) + "\n")
    atomic_write(
        freq_path,
        "frequency_hz\n" + "\n".join(_FMT % v for v in ds.freq_axis_hz) + "\n",
    )
    atomic_write(
        col_path,
        ds.col_kind + "\n" + "\n".join(_FMT % v for v in ds.col_axis) + "\n",
    )


def read_spectrogram_csv(matrix_path: str, freq_path: str, col_path: str) -> SpectrogramDataset:
    """Read the three files of a spectrogram dataset back.

    The matrix file must open with its orientation comment; rows must be
    rectangular; axis lengths must match the matrix dimensions.  Parse
    failures name the file, row, and column.
    """
    with open(matrix_path, "r") as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise DataError(f"{matrix_path}: empty matrix file")
    header = lines[0].strip()
    kinds = {v: k for k, v in _MATRIX_HEADERS.items()}
    if header not in kinds:
        raise DataError(
            f"{matrix_path}: first line must declare the orientation, one of "
            f"{sorted(_MATRIX_HEADERS.values())}; got {header!r}"
        )
    col_kind = kinds[header]
    rows = []
    width = None
    for i, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        cells = line.split(",")
        if width is None:
            width = len(cells)
        elif len(cells) != width:
            raise DataError(
                f"{matrix_path}: ragged row at row {i}: {len(cells)} cells, "
                f"expected {width}"
            )
        rows.append([_parse_float(c.strip(), matrix_path, i, j + 1) for j, c in enumerate(cells)])
    if not rows:
        raise DataError(f"{matrix_path}: matrix has no data rows")
    matrix = np.asarray(rows, dtype=float)

    _, freq_axis = _read_axis(freq_path, {"frequency_hz"})
    col_header, col_axis = _read_axis(col_path, {col_kind})
    if freq_axis.size != matrix.shape[0]:
        raise DataError(
            f"{freq_path}: axis length {freq_axis.size} does not match "
            f"{matrix.shape[0]} matrix rows"
        )
    if col_axis.size != matrix.shape[1]:
        raise DataError(
            f"{col_path}: axis length {col_axis.size} does not match "
            f"{matrix.shape[1]} matrix columns"
        )
    if col_kind == "time_s":
        kwargs = {"time_axis_s": col_axis}
    else:
        kwargs = {"power_axis_dbm": col_axis}
    return SpectrogramDataset(power_db=matrix, freq_axis_hz=freq_axis, **kwargs)


_TRACK_HEADER = "power_dbm,f_peak_hz,linewidth_3db_hz,valid,clamped"


def write_track_csv(track: PeakTrack, path: str) -> None:
    """Write a peak track as one CSV with flag columns as 0/1."""
    lines = [_TRACK_HEADER]
    for i in range(len(track)):
        lines.append(
            _format_row([track.p_inj_dbm[i], track.f_peak[i], track.linewidth_3db[i]])
            + f",{int(track.valid[i])},{int(track.clamped[i])}"
        )
    atomic_write(path, "\n".join(lines) + "\n")


def read_track_csv(path: str) -> PeakTrack:
    with open(path, "r") as fh:
        lines = fh.read().splitlines()
    if not lines or lines[0].strip() != _TRACK_HEADER:
        raise DataError(f"{path}: first line must be the header {_TRACK_HEADER!r}")
    cols = ([], [], [], [], [])
    for i, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        cells = line.split(",")
        if len(cells) != 5:
            raise DataError(f"{path}: row {i} has {len(cells)} cells, expected 5")
        for j, (acc, cell) in enumerate(zip(cols, cells)):
            acc.append(_parse_float(cell.strip(), path, i, j + 1))
    return PeakTrack(
        p_inj_dbm=np.asarray(cols[0]),
        f_peak=np.asarray(cols[1]),
        linewidth_3db=np.asarray(cols[2]),
        valid=np.asarray(cols[3], dtype=float) != 0,
        clamped=np.asarray(cols[4], dtype=float) != 0,
    )


_RESP_HEADER = "power_dbm,responsivity_hz_per_db"


def write_responsivity_csv(curve: ResponsivityCurve, path: str) -> None:
    lines = [_RESP_HEADER]
    lines.extend(
        _format_row([p, r])
        for p, r in zip(curve.p_inj_dbm, curve.responsivity_hz_per_db)
    )
    atomic_write(path, "\n".join(lines) + "\n")


def read_responsivity_csv(path: str) -> ResponsivityCurve:
    with open(path, "r") as fh:
        lines = fh.read().splitlines()
    if not lines or lines[0].strip() != _RESP_HEADER:
        raise DataError(f"{path}: first line must be the header {_RESP_HEADER!r}")
    ps, rs = [], []
    for i, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        cells = line.split(",")
        if len(cells) != 2:
            raise DataError(f"{path}: row {i} has {len(cells)} cells, expected 2")
        ps.append(_parse_float(cells[0].strip(), path, i, 1))
        rs.append(_parse_float(cells[1].strip(), path, i, 2))
    return ResponsivityCurve(
        p_inj_dbm=np.asarray(ps), responsivity_hz_per_db=np.asarray(rs)
    )


def write_fit_csv(fit: AdlerFit, path: str) -> None:
    """Write a fit result as key,value rows with %.9e numerics."""
    rows = [
        ("delta_f0_hat_hz", _FMT % fit.delta_f0_hat),
        ("beta_hat_per_mw", _FMT % fit.beta_hat),
        ("cov_00", _FMT % fit.covariance[0, 0]),
        ("cov_01", _FMT % fit.covariance[0, 1]),
        ("cov_11", _FMT % fit.covariance[1, 1]),
        ("residual_rms_hz", _FMT % fit.residual_rms),
        ("n_iterations", str(fit.n_iterations)),
        ("converged", str(int(fit.converged))),
        ("beta_at_bound", str(int(fit.beta_at_bound))),
    ]
    atomic_write(path, "parameter,value\n" + "\n".join(f"{k},{v}" for k, v in rows) + "\n")


def power_averaged_dataset(
    spg: Spectrogram, schedule_dbm: np.ndarray, metadata: Optional[dict] = None
) -> SpectrogramDataset:
    """Collapse a swept spectrogram to one column per power step.

    Columns sharing a scheduled power are averaged in linear power, giving
    the frequency-by-power matrix shape of a processed sweep dataset.
    """
    sched = np.asarray(schedule_dbm, dtype=float)
    if sched.ndim != 1 or sched.size != spg.time_axis.size:
        raise DataError("schedule must assign one power to each spectrogram column")
    powers = np.unique(sched)
    cols = np.empty((spg.freq_axis.size, powers.size))
    for i, p in enumerate(powers):
        lin = np.mean(10.0 ** (spg.power_db[:, sched == p] / 10.0), axis=1)
        cols[:, i] = 10.0 * np.log10(lin)
    return SpectrogramDataset(
        power_db=cols,
        freq_axis_hz=spg.freq_axis,
        power_axis_dbm=powers,
        metadata=dict(metadata or {}),
    )
