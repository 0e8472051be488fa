"""Minimal deterministic SVG renderers for report artifacts.

Hand-rolled on purpose: charts must be byte-identical across runs and
machines, which rules out renderer libraries with font probing or
timestamped output. Numbers are formatted with repr-stable %g so the same
inputs always produce the same bytes.
"""

from __future__ import annotations

from xml.sax.saxutils import escape

from .errors import ContractError

_W = 640
_H = 400
_MARGIN_L = 60
_MARGIN_R = 20
_MARGIN_T = 30
_MARGIN_B = 50

# fixed palette; order matters for series -> color assignment
_COLORS = ("#4477aa", "#ee6677", "#228833", "#ccbb44", "#66ccee", "#aa3377")


def _fmt(x: float) -> str:
    return f"{x:.6g}"


def _frame(title: str, body: list[str]) -> str:
    head = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}" '
        f'viewBox="0 0 {_W} {_H}">',
        f'<rect width="{_W}" height="{_H}" fill="#ffffff"/>',
        f'<text x="{_W / 2:.6g}" y="20" text-anchor="middle" '
        f'font-family="sans-serif" font-size="14">{escape(title)}</text>',
    ]
    return "\n".join(head + body + ["</svg>"]) + "\n"


def _y_ticks(lo: float, hi: float, n: int = 5) -> list[float]:
    if hi <= lo:
        hi = lo + 1.0
    return [lo + (hi - lo) * i / (n - 1) for i in range(n)]


def bar_chart(
    labels: list[str],
    values: list[float],
    title: str,
    y_label: str = "",
) -> str:
    """Vertical bar chart; bars in the given label order."""
    if len(labels) != len(values):
        raise ContractError("bar_chart: labels and values differ in length")
    if not labels:
        raise ContractError("bar_chart: nothing to plot")
    lo = min(0.0, min(values))
    hi = max(0.0, max(values))
    if hi == lo:
        hi = lo + 1.0
    plot_w = _W - _MARGIN_L - _MARGIN_R
    plot_h = _H - _MARGIN_T - _MARGIN_B

    def ypix(v: float) -> float:
        return _MARGIN_T + plot_h * (hi - v) / (hi - lo)

    body = []
    for tick in _y_ticks(lo, hi):
        y = ypix(tick)
        body.append(
            f'<line x1="{_MARGIN_L}" y1="{_fmt(y)}" x2="{_W - _MARGIN_R}" '
            f'y2="{_fmt(y)}" stroke="#dddddd"/>'
        )
        body.append(
            f'<text x="{_MARGIN_L - 6}" y="{_fmt(y + 4)}" text-anchor="end" '
            f'font-family="sans-serif" font-size="10">{_fmt(tick)}</text>'
        )
    n = len(values)
    slot = plot_w / n
    bar_w = slot * 0.7
    base = ypix(0.0)
    for i, (lab, val) in enumerate(zip(labels, values)):
        x = _MARGIN_L + slot * i + (slot - bar_w) / 2
        top = ypix(max(val, 0.0))
        h = abs(ypix(val) - base)
        body.append(
            f'<rect x="{_fmt(x)}" y="{_fmt(top)}" width="{_fmt(bar_w)}" '
            f'height="{_fmt(h)}" fill="{_COLORS[i % len(_COLORS)]}"/>'
        )
        body.append(
            f'<text x="{_fmt(x + bar_w / 2)}" y="{_H - _MARGIN_B + 16}" '
            f'text-anchor="middle" font-family="sans-serif" font-size="10">'
            f"{escape(lab)}</text>"
        )
    if y_label:
        body.append(
            f'<text x="14" y="{_H / 2:.6g}" text-anchor="middle" '
            f'font-family="sans-serif" font-size="11" '
            f'transform="rotate(-90 14 {_H / 2:.6g})">{escape(y_label)}</text>'
        )
    return _frame(title, body)


def line_chart(
    series: dict[str, list[tuple[float, float]]],
    title: str,
    x_label: str = "",
    y_label: str = "",
) -> str:
    """Multi-series line chart; series drawn in sorted-name order."""
    if not series or all(not pts for pts in series.values()):
        raise ContractError("line_chart: nothing to plot")
    xs = [p[0] for pts in series.values() for p in pts]
    ys = [p[1] for pts in series.values() for p in pts]
    xlo, xhi = min(xs), max(xs)
    ylo, yhi = min(min(ys), 0.0), max(ys)
    if xhi == xlo:
        xhi = xlo + 1.0
    if yhi == ylo:
        yhi = ylo + 1.0
    plot_w = _W - _MARGIN_L - _MARGIN_R
    plot_h = _H - _MARGIN_T - _MARGIN_B

    def xpix(v: float) -> float:
        return _MARGIN_L + plot_w * (v - xlo) / (xhi - xlo)

    def ypix(v: float) -> float:
        return _MARGIN_T + plot_h * (yhi - v) / (yhi - ylo)

    body = []
    for tick in _y_ticks(ylo, yhi):
        y = ypix(tick)
        body.append(
            f'<line x1="{_MARGIN_L}" y1="{_fmt(y)}" x2="{_W - _MARGIN_R}" '
            f'y2="{_fmt(y)}" stroke="#dddddd"/>'
        )
        body.append(
            f'<text x="{_MARGIN_L - 6}" y="{_fmt(y + 4)}" text-anchor="end" '
            f'font-family="sans-serif" font-size="10">{_fmt(tick)}</text>'
        )
    for tick in _y_ticks(xlo, xhi):
        x = xpix(tick)
        body.append(
            f'<text x="{_fmt(x)}" y="{_H - _MARGIN_B + 16}" text-anchor="middle" '
            f'font-family="sans-serif" font-size="10">{_fmt(tick)}</text>'
        )
    legend_y = _MARGIN_T + 4
    for i, name in enumerate(sorted(series)):
        pts = series[name]
        if not pts:
            continue
        color = _COLORS[i % len(_COLORS)]
        d = " ".join(
            f"{'M' if j == 0 else 'L'} {_fmt(xpix(px))} {_fmt(ypix(py))}"
            for j, (px, py) in enumerate(pts)
        )
        body.append(f'<path d="{d}" fill="none" stroke="{color}" stroke-width="1.5"/>')
        body.append(
            f'<rect x="{_W - _MARGIN_R - 110}" y="{_fmt(legend_y)}" width="10" '
            f'height="10" fill="{color}"/>'
        )
        body.append(
            f'<text x="{_W - _MARGIN_R - 96}" y="{_fmt(legend_y + 9)}" '
            f'font-family="sans-serif" font-size="10">{escape(name)}</text>'
        )
        legend_y += 14
    if x_label:
        body.append(
            f'<text x="{_W / 2:.6g}" y="{_H - 8}" text-anchor="middle" '
            f'font-family="sans-serif" font-size="11">{escape(x_label)}</text>'
        )
    if y_label:
        body.append(
            f'<text x="14" y="{_H / 2:.6g}" text-anchor="middle" '
            f'font-family="sans-serif" font-size="11" '
            f'transform="rotate(-90 14 {_H / 2:.6g})">{escape(y_label)}</text>'
        )
    return _frame(title, body)


def cdf_chart(
    series: dict[str, list[tuple[float, float]]],
    title: str,
    x_label: str = "",
) -> str:
    """CDF rendering: a line chart whose y axis is the cumulative fraction."""
    return line_chart(series, title, x_label=x_label, y_label="cumulative fraction")
