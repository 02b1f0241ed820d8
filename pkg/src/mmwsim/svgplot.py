"""Minimal deterministic SVG line plots.

Hand-rolled on purpose: the output must be byte-identical for identical
input, which rules out plot libraries whose output embeds timestamps,
library versions or dictionary-ordered attributes.  Only what the sweep
plots need is implemented: axes with tick labels, one polyline per series,
and a legend.
"""

from __future__ import annotations

import math

__all__ = ["render_line_plot"]

# Color-blind-safe cycle (Okabe-Ito), repeated if there are more series.
_PALETTE = (
    "#0072b2", "#d55e00", "#009e73", "#cc79a7",
    "#e69f00", "#56b4e9", "#f0e442", "#000000",
)

_WIDTH = 640.0
_HEIGHT = 440.0
_MARGIN_LEFT = 70.0
_MARGIN_RIGHT = 24.0
_MARGIN_TOP = 24.0
_MARGIN_BOTTOM = 52.0


def _nice_ticks(lo: float, hi: float, target: int = 5) -> list[float]:
    """Round tick positions covering [lo, hi] at a 1/2/5 step."""
    if hi <= lo:
        return [lo]
    raw = (hi - lo) / max(target, 1)
    mag = 10.0 ** math.floor(math.log10(raw))
    for mult in (1.0, 2.0, 5.0, 10.0):
        step = mult * mag
        if raw <= step:
            break
    first = math.ceil(lo / step) * step
    ticks = []
    value = first
    while value <= hi + 1e-9 * step:
        # Snap to the step grid to avoid accumulation drift in the labels.
        ticks.append(round(value / step) * step)
        value += step
    return ticks or [lo]


def _fmt_coord(value: float) -> str:
    return format(value, ".2f")


def _fmt_label(value: float) -> str:
    text = format(value, ".6g")
    return text


def _escape(text: str) -> str:
    return (
        text.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")
        .replace('"', "&quot;")
    )


def render_line_plot(
    series: list[tuple[str, list[tuple[float, float]]]],
    x_label: str,
    y_label: str,
    title: str = "",
) -> str:
    """Render labeled line series to an SVG document string.

    Parameters
    ----------
    series : list of (label, points)
        Each ``points`` is a list of (x, y) pairs, already sorted by x.
    x_label, y_label : str
        Axis captions.
    title : str
        Optional caption drawn above the plot area.
    """
    if not series:
        raise ValueError("nothing to plot: no series given")
    for label, points in series:
        if not points:
            raise ValueError(f"series {label!r} has no points")

    xs = [x for _, pts in series for x, _ in pts]
    ys = [y for _, pts in series for _, y in pts]
    x_lo, x_hi = min(xs), max(xs)
    y_lo, y_hi = min(ys), max(ys)
    if x_hi == x_lo:
        pad = abs(x_lo) * 0.1 or 1.0
        x_lo, x_hi = x_lo - pad, x_hi + pad
    if y_hi == y_lo:
        pad = abs(y_lo) * 0.1 or 1.0
        y_lo, y_hi = y_lo - pad, y_hi + pad
    else:
        pad = (y_hi - y_lo) * 0.05
        y_lo, y_hi = y_lo - pad, y_hi + pad

    plot_w = _WIDTH - _MARGIN_LEFT - _MARGIN_RIGHT
    plot_h = _HEIGHT - _MARGIN_TOP - _MARGIN_BOTTOM

    def sx(x: float) -> float:
        return _MARGIN_LEFT + (x - x_lo) / (x_hi - x_lo) * plot_w

    def sy(y: float) -> float:
        return _MARGIN_TOP + plot_h - (y - y_lo) / (y_hi - y_lo) * plot_h

    out: list[str] = []
    out.append(
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_WIDTH:.0f}" '
        f'height="{_HEIGHT:.0f}" viewBox="0 0 {_WIDTH:.0f} {_HEIGHT:.0f}">'
    )
    out.append(f'<rect x="0" y="0" width="{_WIDTH:.0f}" height="{_HEIGHT:.0f}" fill="#ffffff"/>')
    if title:
        out.append(
            f'<text x="{_WIDTH / 2:.0f}" y="16" text-anchor="middle" '
            f'font-family="sans-serif" font-size="13" fill="#000000">{_escape(title)}</text>'
        )

    # Gridlines and tick labels.
    for tick in _nice_ticks(x_lo, x_hi):
        px = sx(tick)
        out.append(
            f'<line x1="{_fmt_coord(px)}" y1="{_fmt_coord(_MARGIN_TOP)}" '
            f'x2="{_fmt_coord(px)}" y2="{_fmt_coord(_MARGIN_TOP + plot_h)}" '
            f'stroke="#dddddd" stroke-width="1"/>'
        )
        out.append(
            f'<text x="{_fmt_coord(px)}" y="{_fmt_coord(_MARGIN_TOP + plot_h + 16)}" '
            f'text-anchor="middle" font-family="sans-serif" font-size="11" '
            f'fill="#000000">{_fmt_label(tick)}</text>'
        )
    for tick in _nice_ticks(y_lo, y_hi):
        py = sy(tick)
        out.append(
            f'<line x1="{_fmt_coord(_MARGIN_LEFT)}" y1="{_fmt_coord(py)}" '
            f'x2="{_fmt_coord(_MARGIN_LEFT + plot_w)}" y2="{_fmt_coord(py)}" '
            f'stroke="#dddddd" stroke-width="1"/>'
        )
        out.append(
            f'<text x="{_fmt_coord(_MARGIN_LEFT - 6)}" y="{_fmt_coord(py + 4)}" '
            f'text-anchor="end" font-family="sans-serif" font-size="11" '
            f'fill="#000000">{_fmt_label(tick)}</text>'
        )

    # Axes frame.
    out.append(
        f'<rect x="{_fmt_coord(_MARGIN_LEFT)}" y="{_fmt_coord(_MARGIN_TOP)}" '
        f'width="{_fmt_coord(plot_w)}" height="{_fmt_coord(plot_h)}" '
        f'fill="none" stroke="#000000" stroke-width="1"/>'
    )
    out.append(
        f'<text x="{_fmt_coord(_MARGIN_LEFT + plot_w / 2)}" y="{_HEIGHT - 10:.0f}" '
        f'text-anchor="middle" font-family="sans-serif" font-size="12" '
        f'fill="#000000">{_escape(x_label)}</text>'
    )
    out.append(
        f'<text x="14" y="{_fmt_coord(_MARGIN_TOP + plot_h / 2)}" text-anchor="middle" '
        f'font-family="sans-serif" font-size="12" fill="#000000" '
        f'transform="rotate(-90 14 {_fmt_coord(_MARGIN_TOP + plot_h / 2)})">'
        f'{_escape(y_label)}</text>'
    )

    # Data: exactly one polyline per series.
    for idx, (label, points) in enumerate(series):
        color = _PALETTE[idx % len(_PALETTE)]
        coords = " ".join(f"{_fmt_coord(sx(x))},{_fmt_coord(sy(y))}" for x, y in points)
        out.append(
            f'<polyline points="{coords}" fill="none" stroke="{color}" stroke-width="1.5"/>'
        )

    # Legend in the top-right corner of the plot area.
    legend_x = _MARGIN_LEFT + plot_w - 150
    legend_y = _MARGIN_TOP + 8
    out.append('<g class="legend">')
    for idx, (label, _) in enumerate(series):
        color = _PALETTE[idx % len(_PALETTE)]
        row_y = legend_y + 16 * idx
        out.append(
            f'<rect x="{_fmt_coord(legend_x)}" y="{_fmt_coord(row_y)}" width="14" '
            f'height="6" fill="{color}"/>'
        )
        out.append(
            f'<text x="{_fmt_coord(legend_x + 20)}" y="{_fmt_coord(row_y + 7)}" '
            f'font-family="sans-serif" font-size="11" fill="#000000">'
            f'{_escape(label)}</text>'
        )
    out.append("</g>")
    out.append("</svg>")
    return "\n".join(out) + "\n"
