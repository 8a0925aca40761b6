"""Plot emission without image libraries: SVG curves, binary PGM heatmaps.

SVG output is a fixed-size line plot with axes, ticks, and a legend,
formatted with stable numeric precision so equal inputs give identical
bytes.  Heatmaps are 16-bit binary PGM (big-endian, as the format
requires) on a fixed dB scale, so no codec dependency is needed and the
mapping from dB to gray level is reproducible across runs.
"""

from __future__ import annotations

import numpy as np

from .errors import DataError
from .signal import DB_FLOOR

__all__ = ["svg_line_plot", "pgm_heatmap", "PGM_DB_RANGE"]

# Fixed dB window of the PGM gray scale: DB_FLOOR maps to 0, 0 dB to 65535.
PGM_DB_RANGE = (DB_FLOOR, 0.0)

_WIDTH, _HEIGHT = 800.0, 500.0
_ML, _MR, _MT, _MB = 80.0, 24.0, 36.0, 56.0
_COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#8c564b", "#e377c2")


def _fmt(x: float) -> str:
    return f"{x:.3f}".rstrip("0").rstrip(".")


def _ticks(lo: float, hi: float, n: int = 6) -> np.ndarray:
    if hi == lo:
        return np.array([lo])
    raw = (hi - lo) / (n - 1)
    mag = 10.0 ** np.floor(np.log10(raw))
    for mult in (1.0, 2.0, 2.5, 5.0, 10.0):
        if raw <= mult * mag:
            step = mult * mag
            break
    first = np.ceil(lo / step) * step
    ticks = np.arange(first, hi + step / 2, step)
    return ticks[(ticks >= lo - step * 1e-9) & (ticks <= hi + step * 1e-9)]


def svg_line_plot(series, xlabel: str, ylabel: str, title: str = "") -> str:
    """Render line series as a standalone SVG document string.

    ``series`` is a sequence of ``(x, y, label)`` triples with 1-D arrays
    of equal length per triple.  Output bytes depend only on the inputs.
    """
    if not series:
        raise DataError("at least one series is required")
    cleaned = []
    for x, y, label in series:
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        if x.ndim != 1 or x.shape != y.shape or x.size == 0:
            raise DataError("each series needs equal-length non-empty 1-D x and y")
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
            raise DataError("series values must be finite")
        cleaned.append((x, y, str(label)))

    x_lo = min(float(x.min()) for x, _, _ in cleaned)
    x_hi = max(float(x.max()) for x, _, _ in cleaned)
    y_lo = min(float(y.min()) for _, y, _ in cleaned)
    y_hi = max(float(y.max()) for _, y, _ in cleaned)
    if x_hi == x_lo:
        x_lo, x_hi = x_lo - 0.5, x_hi + 0.5
    if y_hi == y_lo:
        y_lo, y_hi = y_lo - 0.5, y_hi + 0.5
    pad = 0.04 * (y_hi - y_lo)
    y_lo, y_hi = y_lo - pad, y_hi + pad

    pw = _WIDTH - _ML - _MR
    ph = _HEIGHT - _MT - _MB

    def sx(v):
        return _ML + (v - x_lo) / (x_hi - x_lo) * pw

    def sy(v):
        return _MT + (y_hi - v) / (y_hi - y_lo) * ph

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_fmt(_WIDTH)}" '
        f'height="{_fmt(_HEIGHT)}" viewBox="0 0 {_fmt(_WIDTH)} {_fmt(_HEIGHT)}">',
        f'<rect width="{_fmt(_WIDTH)}" height="{_fmt(_HEIGHT)}" fill="white"/>',
    ]
    if title:
        parts.append(
            f'<text x="{_fmt(_WIDTH / 2)}" y="22" text-anchor="middle" '
            f'font-family="sans-serif" font-size="15">{_escape(title)}</text>'
        )
    ax = f'{_fmt(_ML)},{_fmt(_MT)} {_fmt(_ML)},{_fmt(_MT + ph)} {_fmt(_ML + pw)},{_fmt(_MT + ph)}'
    parts.append(f'<polyline points="{ax}" fill="none" stroke="black" stroke-width="1"/>')
    for t in _ticks(x_lo, x_hi):
        px = sx(t)
        parts.append(
            f'<line x1="{_fmt(px)}" y1="{_fmt(_MT + ph)}" x2="{_fmt(px)}" '
            f'y2="{_fmt(_MT + ph + 5)}" stroke="black" stroke-width="1"/>'
        )
        parts.append(
            f'<text x="{_fmt(px)}" y="{_fmt(_MT + ph + 20)}" text-anchor="middle" '
            f'font-family="sans-serif" font-size="12">{t:g}</text>'
        )
    for t in _ticks(y_lo, y_hi):
        py = sy(t)
        parts.append(
            f'<line x1="{_fmt(_ML - 5)}" y1="{_fmt(py)}" x2="{_fmt(_ML)}" '
            f'y2="{_fmt(py)}" stroke="black" stroke-width="1"/>'
        )
        parts.append(
            f'<text x="{_fmt(_ML - 8)}" y="{_fmt(py + 4)}" text-anchor="end" '
            f'font-family="sans-serif" font-size="12">{t:g}</text>'
        )
    parts.append(
        f'<text x="{_fmt(_ML + pw / 2)}" y="{_fmt(_HEIGHT - 12)}" text-anchor="middle" '
        f'font-family="sans-serif" font-size="13">{_escape(xlabel)}</text>'
    )
    parts.append(
        f'<text x="18" y="{_fmt(_MT + ph / 2)}" text-anchor="middle" '
        f'font-family="sans-serif" font-size="13" '
        f'transform="rotate(-90 18 {_fmt(_MT + ph / 2)})">{_escape(ylabel)}</text>'
    )
    for i, (x, y, label) in enumerate(cleaned):
        color = _COLORS[i % len(_COLORS)]
        pts = " ".join(f"{_fmt(sx(a))},{_fmt(sy(b))}" for a, b in zip(x, y))
        parts.append(
            f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="1.5"/>'
        )
        if label:
            ly = _MT + 16 + 18 * i
            lx = _ML + pw - 150
            parts.append(
                f'<line x1="{_fmt(lx)}" y1="{_fmt(ly - 4)}" x2="{_fmt(lx + 24)}" '
                f'y2="{_fmt(ly - 4)}" stroke="{color}" stroke-width="1.5"/>'
            )
            parts.append(
                f'<text x="{_fmt(lx + 30)}" y="{_fmt(ly)}" font-family="sans-serif" '
                f'font-size="12">{_escape(label)}</text>'
            )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def _escape(text: str) -> str:
    return text.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")


def pgm_heatmap(power_db: np.ndarray) -> bytes:
    """Encode a dB matrix (rows = frequency, ascending) as 16-bit binary PGM.

    The top image row is the highest frequency; gray levels map the fixed
    window ``PGM_DB_RANGE`` linearly onto 0..65535, clipping outside it.
    """
    m = np.asarray(power_db, dtype=float)
    if m.ndim != 2 or m.size == 0:
        raise DataError("power_db must be a non-empty 2-D matrix")
    if not np.all(np.isfinite(m)):
        raise DataError("power_db must be finite")
    lo, hi = PGM_DB_RANGE
    scaled = (np.clip(m, lo, hi) - lo) / (hi - lo) * 65535.0
    pixels = np.flipud(np.round(scaled).astype(">u2"))
    header = f"P5\n{m.shape[1]} {m.shape[0]}\n65535\n".encode("ascii")
    return header + pixels.tobytes()
