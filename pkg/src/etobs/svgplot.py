"""Minimal static SVG plots: stacked panels of polylines and scatters.

Deliberately dependency-free; output is a pure function of the data so
repeated runs produce byte-identical files.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = ["Series", "Panel", "render_panels"]

_COLORS = ("#1f6fb2", "#d95f02", "#1b9e77", "#7570b3", "#e7298a")

WIDTH = 860
PANEL_H = 190
MARGIN_L = 72
MARGIN_R = 16
MARGIN_T = 28
MARGIN_B = 34


@dataclass
class Series:
    x: np.ndarray
    y: np.ndarray
    label: str = ""
    kind: str = "line"  # or "scatter" / "step"


@dataclass
class Panel:
    title: str
    ylabel: str = ""
    series: list = field(default_factory=list)


def _fmt(v: float) -> str:
    return f"{v:.6g}"


def _bounds(values: np.ndarray) -> tuple[float, float]:
    finite = values[np.isfinite(values)]
    if finite.size == 0:
        return 0.0, 1.0
    lo, hi = float(finite.min()), float(finite.max())
    if hi <= lo:
        pad = max(abs(lo), 1.0) * 0.05
        return lo - pad, hi + pad
    pad = (hi - lo) * 0.05
    return lo - pad, hi + pad


def _step_points(x: np.ndarray, y: np.ndarray):
    """Duplicate points so held values render as horizontal treads."""
    xs, ys = [x[0]], [y[0]]
    for k in range(1, len(x)):
        xs += [x[k], x[k]]
        ys += [y[k - 1], y[k]]
    return np.asarray(xs), np.asarray(ys)


def render_panels(panels: list[Panel], path, x_label: str = "t [s]") -> None:
    """Write stacked panels sharing one x-axis style to an SVG file."""
    height = MARGIN_T + len(panels) * (PANEL_H + MARGIN_B)
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" '
        f'height="{height}" font-family="Helvetica,Arial,sans-serif" '
        f'font-size="11">',
        f'<rect width="{WIDTH}" height="{height}" fill="white"/>',
    ]
    plot_w = WIDTH - MARGIN_L - MARGIN_R

    for pi, panel in enumerate(panels):
        top = MARGIN_T + pi * (PANEL_H + MARGIN_B)
        xs_all = [s.x for s in panel.series if len(s.x)]
        ys_all = [s.y for s in panel.series if len(s.y)]
        x_lo, x_hi = _bounds(np.concatenate(xs_all) if xs_all else np.empty(0))
        y_lo, y_hi = _bounds(np.concatenate(ys_all) if ys_all else np.empty(0))

        def sx(v):
            return MARGIN_L + (v - x_lo) / (x_hi - x_lo) * plot_w

        def sy(v):
            return top + PANEL_H - (v - y_lo) / (y_hi - y_lo) * PANEL_H

        out.append(f'<rect x="{MARGIN_L}" y="{top}" width="{plot_w}" '
                   f'height="{PANEL_H}" fill="none" stroke="#888"/>')
        out.append(f'<text x="{MARGIN_L}" y="{top - 8}" font-weight="bold">'
                   f'{panel.title}</text>')
        out.append(f'<text x="{MARGIN_L - 6}" y="{top + 10}" text-anchor="end">'
                   f'{_fmt(y_hi)}</text>')
        out.append(f'<text x="{MARGIN_L - 6}" y="{top + PANEL_H}" '
                   f'text-anchor="end">{_fmt(y_lo)}</text>')
        out.append(f'<text x="{MARGIN_L}" y="{top + PANEL_H + 16}">'
                   f'{_fmt(x_lo)}</text>')
        out.append(f'<text x="{MARGIN_L + plot_w}" y="{top + PANEL_H + 16}" '
                   f'text-anchor="end">{_fmt(x_hi)}</text>')
        if panel.ylabel:
            out.append(f'<text x="{MARGIN_L + plot_w}" y="{top - 8}" '
                       f'text-anchor="end" fill="#555">{panel.ylabel}</text>')
        if 0.0 > y_lo and 0.0 < y_hi:
            zy = sy(0.0)
            out.append(f'<line x1="{MARGIN_L}" y1="{zy:.2f}" '
                       f'x2="{MARGIN_L + plot_w}" y2="{zy:.2f}" '
                       f'stroke="#ccc" stroke-dasharray="4 3"/>')

        for si, series in enumerate(panel.series):
            color = _COLORS[si % len(_COLORS)]
            if len(series.x) == 0:
                continue
            if series.kind == "scatter":
                pts = "".join(
                    f'<circle cx="{sx(px):.2f}" cy="{sy(py):.2f}" r="2.2" '
                    f'fill="{color}"/>'
                    for px, py in zip(series.x, series.y)
                    if np.isfinite(px) and np.isfinite(py))
                out.append(pts)
            else:
                x, y = series.x, series.y
                if series.kind == "step" and len(x) > 1:
                    x, y = _step_points(np.asarray(x), np.asarray(y))
                coords = " ".join(f"{sx(px):.2f},{sy(py):.2f}"
                                  for px, py in zip(x, y)
                                  if np.isfinite(px) and np.isfinite(py))
                out.append(f'<polyline points="{coords}" fill="none" '
                           f'stroke="{color}" stroke-width="1.2"/>')
            if series.label:
                lx = MARGIN_L + 8 + 130 * si
                out.append(f'<text x="{lx}" y="{top + 14}" fill="{color}">'
                           f'{series.label}</text>')

        out.append(f'<text x="{MARGIN_L + plot_w / 2:.0f}" '
                   f'y="{top + PANEL_H + 28}" text-anchor="middle" '
                   f'fill="#555">{x_label}</text>')

    out.append("</svg>")
    with open(path, "w") as fh:
        fh.write("\n".join(out))
