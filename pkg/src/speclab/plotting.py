"""Standalone SVG line plots with the plotted data embedded as CSV."""

from __future__ import annotations

from xml.sax.saxutils import escape

import numpy as np

__all__ = ["line_plot_svg"]

_W, _H = 560, 380
_ML, _MR, _MT, _MB = 70, 20, 40, 50


def _ticks(lo: float, hi: float, n: int = 5):
    if hi <= lo:
        hi = lo + 1.0
    return [lo + (hi - lo) * k / (n - 1) for k in range(n)]


def line_plot_svg(x, y, path, title: str = "", xlabel: str = "", ylabel: str = "",
                  logx: bool = False, logy: bool = False) -> str:
    """Write a polyline plot of ``y`` against ``x`` and return the SVG text.

    Log axes plot ``log10`` of the data and label ticks with powers of ten.
    Non-positive values on a log axis are dropped from the polyline but kept
    in the embedded table.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.size == 0:
        raise ValueError("x and y must be non-empty and of equal length")
    keep = np.isfinite(x) & np.isfinite(y)
    if logx:
        keep &= x > 0
    if logy:
        keep &= y > 0
    X = np.log10(x[keep]) if logx else x[keep]
    Y = np.log10(y[keep]) if logy else y[keep]
    if X.size == 0:
        X, Y = np.array([0.0]), np.array([0.0])
    x0, x1 = float(X.min()), float(X.max())
    y0, y1 = float(Y.min()), float(Y.max())
    if x1 == x0:
        x0, x1 = x0 - 0.5, x1 + 0.5
    if y1 == y0:
        pad = 0.5 if y0 == 0 else 0.1 * abs(y0)
        y0, y1 = y0 - pad, y1 + pad
    pw, ph = _W - _ML - _MR, _H - _MT - _MB

    def px(v):
        return _ML + (v - x0) / (x1 - x0) * pw

    def py(v):
        return _MT + ph - (v - y0) / (y1 - y0) * ph

    def label(v, log):
        return f"1e{v:.2g}" if log else f"{v:.4g}"

    pts = " ".join(f"{px(a):.2f},{py(b):.2f}" for a, b in zip(X, Y))
    table = "x,y\n" + "\n".join(f"{float(a)!r},{float(b)!r}" for a, b in zip(x, y))
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}" '
        f'viewBox="0 0 {_W} {_H}" font-family="sans-serif" font-size="11">',
        f"<metadata><![CDATA[\n{table}\n]]></metadata>",
        f'<rect x="0" y="0" width="{_W}" height="{_H}" fill="white"/>',
        f'<text x="{_W / 2}" y="22" text-anchor="middle" font-size="14">{escape(title)}</text>',
        f'<rect x="{_ML}" y="{_MT}" width="{pw}" height="{ph}" fill="none" stroke="black"/>',
    ]
    for t in _ticks(x0, x1):
        parts.append(f'<line x1="{px(t):.2f}" y1="{_MT + ph}" x2="{px(t):.2f}" '
                     f'y2="{_MT + ph + 4}" stroke="black"/>')
        parts.append(f'<text x="{px(t):.2f}" y="{_MT + ph + 16}" text-anchor="middle">'
                     f"{label(t, logx)}</text>")
    for t in _ticks(y0, y1):
        parts.append(f'<line x1="{_ML - 4}" y1="{py(t):.2f}" x2="{_ML}" y2="{py(t):.2f}" '
                     f'stroke="black"/>')
        parts.append(f'<text x="{_ML - 6}" y="{py(t) + 4:.2f}" text-anchor="end">'
                     f"{label(t, logy)}</text>")
    parts.append(f'<text x="{_ML + pw / 2}" y="{_H - 10}" text-anchor="middle">'
                 f"{escape(xlabel)}</text>")
    parts.append(f'<text x="16" y="{_MT + ph / 2}" text-anchor="middle" '
                 f'transform="rotate(-90 16 {_MT + ph / 2})">{escape(ylabel)}</text>')
    parts.append(f'<polyline points="{pts}" fill="none" stroke="#1f4e9c" stroke-width="1.5"/>')
    for a, b in zip(X, Y):
        parts.append(f'<circle cx="{px(a):.2f}" cy="{py(b):.2f}" r="2.5" fill="#1f4e9c"/>')
    parts.append("</svg>\n")
    svg = "\n".join(parts)
    with open(path, "w") as fh:
        fh.write(svg)
    return svg
