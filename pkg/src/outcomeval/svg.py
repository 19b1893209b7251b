"""Deterministic SVG emitters: forest plots, box plots and the Pareto scatter."""

from __future__ import annotations

import math
from typing import Mapping, Optional, Sequence
from xml.sax.saxutils import escape

import numpy as np

from .evidence.types import DataKind, Outcome
from .experiments.pareto import ParetoPoint
from .meta_analysis import PooledOutcome, confidence_interval, study_effect, z_multiplier

FONT = 'font-family="Helvetica, Arial, sans-serif" font-size="11"'


class _Canvas:
    def __init__(self, width: float, height: float):
        self.width, self.height = width, height
        self.parts: list[str] = []

    def line(self, x1, y1, x2, y2, stroke="#333", width=1.0, extra=""):
        self.parts.append(f'<line x1="{x1:.2f}" y1="{y1:.2f}" x2="{x2:.2f}" y2="{y2:.2f}" '
                          f'stroke="{stroke}" stroke-width="{width:g}"{extra}/>')

    def rect(self, x, y, w, h, fill="#333", stroke="none", extra=""):
        self.parts.append(f'<rect x="{x:.2f}" y="{y:.2f}" width="{w:.2f}" height="{h:.2f}" '
                          f'fill="{fill}" stroke="{stroke}"{extra}/>')

    def circle(self, cx, cy, r, fill="#333", stroke="none", extra=""):
        self.parts.append(f'<circle cx="{cx:.2f}" cy="{cy:.2f}" r="{r:.2f}" fill="{fill}" '
                          f'stroke="{stroke}"{extra}/>')

    def polygon(self, points, fill="#333", extra=""):
        pts = " ".join(f"{x:.2f},{y:.2f}" for x, y in points)
        self.parts.append(f'<polygon points="{pts}" fill="{fill}"{extra}/>')

    def text(self, x, y, value, anchor="start", extra=""):
        self.parts.append(f'<text x="{x:.2f}" y="{y:.2f}" text-anchor="{anchor}" {FONT}'
                          f'{extra}>{escape(str(value))}</text>')

    def group(self, cls: str):
        self.parts.append(f'<g class="{cls}">')

    def end_group(self):
        self.parts.append("</g>")

    def render(self) -> bytes:
        head = (f'<svg xmlns="http://www.w3.org/2000/svg" width="{self.width:.0f}" '
                f'height="{self.height:.0f}" viewBox="0 0 {self.width:.0f} {self.height:.0f}">')
        body = "\n".join([head, f'<rect width="100%" height="100%" fill="white"/>',
                          *self.parts, "</svg>"])
        return (body + "\n").encode("utf-8")


def _fmt(value: float, digits: int = 2) -> str:
    return f"{value:.{digits}f}"


def render_forest_svg(outcome: Outcome, pooled: PooledOutcome,
                      included: Optional[set] = None) -> bytes:
    """Forest plot of an outcome; rows restricted to ``included`` studies if given."""
    rows = [r for r in outcome.rows if included is None or r.study_id in included]
    measure = outcome.effect_measure
    log_scale = measure.is_ratio
    effects = [study_effect(r.data, measure, r.study_id) for r in rows]
    intervals = [confidence_interval(e.transformed_point, e.se, outcome.ci_level, log_scale)
                 if e.estimable else None for e in effects]

    def to_axis(v: float) -> float:
        return math.log(v) if log_scale else v

    values = [to_axis(v) for ci in intervals if ci for v in ci if v > 0 or not log_scale]
    if pooled.estimable:
        values += [to_axis(pooled.ci_low), to_axis(pooled.ci_high)]
    null = to_axis(measure.null_value)
    values.append(null)
    lo, hi = min(values), max(values)
    if hi - lo < 1e-9:
        lo, hi = lo - 1, hi + 1
    pad = (hi - lo) * 0.05
    lo, hi = lo - pad, hi + pad

    row_h, top = 22, 50
    width = 900
    plot_x0, plot_x1 = 520, 860
    height = top + row_h * (len(rows) + 2) + 40
    canvas = _Canvas(width, height)

    def px(v: float) -> float:
        v = min(max(v, lo), hi)
        return plot_x0 + (v - lo) / (hi - lo) * (plot_x1 - plot_x0)

    dich = outcome.data_kind is DataKind.DICHOTOMOUS
    headers = (["Study", "Events", "Total", "Events", "Total"] if dich
               else ["Study", "Mean", "Total", "Mean", "Total"])
    cols = [20, 170, 220, 270, 320]
    canvas.text(20, 20, f"{outcome.outcome_id} {outcome.name}".strip())
    canvas.text(170, 38, "Experimental")
    canvas.text(270, 38, "Control")
    for x, h in zip(cols, headers):
        canvas.text(x, top - 2, h)
    canvas.text(380, top - 2, "Weight")
    canvas.text(440, top - 2, f"{measure.value} [{round(outcome.ci_level * 100):d}% CI]")

    for i, (row, eff, ci) in enumerate(zip(rows, effects, intervals)):
        y = top + row_h * (i + 1)
        canvas.group("study-row")
        d = row.data
        cells = ([row.study_id, d.events_exp, d.total_exp, d.events_ctrl, d.total_ctrl] if dich
                 else [row.study_id, _fmt(d.mean_exp), d.n_exp, _fmt(d.mean_ctrl), d.n_ctrl])
        for x, cell in zip(cols, cells):
            canvas.text(x, y, cell)
        weight = pooled.weights.get(row.study_id) if pooled.estimable else None
        canvas.text(380, y, f"{weight * 100:.1f}%" if weight is not None else "")
        if ci is None:
            canvas.text(440, y, "Not estimable")
        else:
            canvas.text(440, y, f"{_fmt(eff.point)} [{_fmt(ci[0])}, {_fmt(ci[1])}]")
            cy = y - 4
            canvas.line(px(to_axis(ci[0])) if ci[0] > 0 or not log_scale else plot_x0, cy,
                        px(to_axis(ci[1])), cy)
            size = 3 + 6 * math.sqrt(weight or 0.0)
            canvas.rect(px(eff.transformed_point) - size / 2, cy - size / 2, size, size,
                        fill="#1f5fa8")
        canvas.end_group()

    y = top + row_h * (len(rows) + 1)
    canvas.group("total-row")
    canvas.text(20, y, "Total")
    if pooled.estimable:
        canvas.text(380, y, "100.0%")
        canvas.text(440, y, f"{_fmt(pooled.estimate)} [{_fmt(pooled.ci_low)}, "
                            f"{_fmt(pooled.ci_high)}]")
        cy = y - 4
        canvas.polygon([(px(to_axis(pooled.ci_low)), cy), (px(pooled.transformed_estimate), cy - 6),
                        (px(to_axis(pooled.ci_high)), cy), (px(pooled.transformed_estimate), cy + 6)],
                       fill="#111")
    else:
        canvas.text(440, y, "Not estimable")
    canvas.end_group()

    axis_y = y + 14
    canvas.line(px(null), top - 12, px(null), axis_y, stroke="#999")
    canvas.line(plot_x0, axis_y, plot_x1, axis_y)
    for v in np.linspace(lo, hi, 5):
        label = math.exp(v) if log_scale else v
        canvas.line(px(v), axis_y, px(v), axis_y + 4)
        canvas.text(px(v), axis_y + 16, f"{label:.2g}", anchor="middle")
    return canvas.render()


def _box_stats(values: Sequence[float]) -> dict[str, float]:
    arr = np.asarray(values, dtype=float)
    q1, median, q3 = (float(v) for v in np.percentile(arr, [25, 50, 75]))
    iqr = q3 - q1
    inside = arr[(arr >= q1 - 1.5 * iqr) & (arr <= q3 + 1.5 * iqr)]
    return {"q1": q1, "median": median, "q3": q3, "mean": float(arr.mean()),
            "low": float(inside.min()), "high": float(inside.max()),
            "outliers": [float(v) for v in arr if v < q1 - 1.5 * iqr or v > q3 + 1.5 * iqr]}


def render_boxplot_svg(groups: Mapping[str, Sequence[float]], title: str = "",
                       axis_label: str = "relative difference (%)",
                       clamp: Optional[float] = None) -> bytes:
    """Horizontal box plots, one per group in the given order; circles mark means.

    ``clamp`` cuts the value axis (outliers beyond it are drawn at the edge).
    """
    names = list(groups)
    row_h, top, left, right = 26, 40, 160, 40
    width = 720
    height = top + row_h * max(len(names), 1) + 50
    canvas = _Canvas(width, height)
    canvas.text(left, 20, title)
    all_values = [v for vals in groups.values() for v in vals]
    hi = max(all_values, default=1.0)
    if clamp is not None:
        hi = min(hi, clamp)
    hi = hi if hi > 0 else 1.0
    x0, x1 = left, width - right

    def px(v: float) -> float:
        return x0 + min(max(v, 0.0), hi) / hi * (x1 - x0)

    for i, name in enumerate(names):
        y = top + row_h * i + row_h / 2
        canvas.group("box")
        canvas.text(left - 8, y + 4, name, anchor="end")
        values = list(groups[name])
        if values:
            s = _box_stats(values)
            canvas.line(px(s["low"]), y, px(s["q1"]), y)
            canvas.line(px(s["q3"]), y, px(s["high"]), y)
            canvas.rect(px(s["q1"]), y - 8, max(px(s["q3"]) - px(s["q1"]), 0.5), 16,
                        fill="#cfe0f3", stroke="#1f5fa8")
            canvas.line(px(s["median"]), y - 8, px(s["median"]), y + 8, stroke="#1f5fa8", width=2)
            for v in s["outliers"]:
                canvas.circle(px(v), y, 2, fill="none", stroke="#555")
            canvas.circle(px(s["mean"]), y, 4, fill="#f28e2b")
        canvas.end_group()
    axis_y = top + row_h * len(names) + 6
    canvas.line(x0, axis_y, x1, axis_y)
    for v in np.linspace(0, hi, 6):
        canvas.line(px(v), axis_y, px(v), axis_y + 4)
        canvas.text(px(v), axis_y + 16, f"{v:.3g}", anchor="middle")
    canvas.text((x0 + x1) / 2, axis_y + 34, axis_label, anchor="middle")
    return canvas.render()


def render_pareto_svg(points: Sequence[ParetoPoint], title: str = "") -> bytes:
    """Scatter of (non-estimable count, normalised summed MoD); frontier filled."""
    width, height = 640, 480
    left, right, top, bottom = 60, 30, 40, 50
    canvas = _Canvas(width, height)
    canvas.text(left, 20, title)
    max_x = max((p.x for p in points), default=1) or 1
    x0, x1, y0, y1 = left, width - right, height - bottom, top

    def px(x):
        return x0 + x / max_x * (x1 - x0)

    def py(y):
        return y0 + y * (y1 - y0)

    canvas.line(x0, y0, x1, y0)
    canvas.line(x0, y0, x0, y1)
    canvas.text((x0 + x1) / 2, height - 12, "non-estimable outcomes", anchor="middle")
    canvas.text(14, (y0 + y1) / 2, "summed relative difference (normalised)", anchor="middle",
                extra=f' transform="rotate(-90 14 {(y0 + y1) / 2:.2f})"')
    frontier = [p for p in points if not p.dominated]
    if len(frontier) > 1:
        path = " ".join(f"{px(p.x):.2f},{py(p.y):.2f}" for p in frontier)
        canvas.parts.append(f'<polyline points="{path}" fill="none" stroke="#1f5fa8" '
                            'stroke-dasharray="4 3"/>')
    for p in points:
        cls = "dominated" if p.dominated else "frontier"
        fill = "none" if p.dominated else "#1f5fa8"
        tag = escape(p.run_tag, {'"': "&quot;"})
        canvas.circle(px(p.x), py(p.y), 5, fill=fill, stroke="#1f5fa8",
                      extra=f' class="{cls}" data-run="{tag}"')
        canvas.text(px(p.x) + 7, py(p.y) - 6, p.run_tag)
    return canvas.render()
