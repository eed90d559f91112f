"""Deterministic report emission: CSV, JSON, and hand-rolled SVG plots.

Byte-identical reruns are a hard requirement, so everything here avoids
timestamps, environment echoes, dict-order dependence (keys are sorted)
and library-generated plot markup. Floats go through repr (JSON) or
%.17g (CSV), SVG coordinates through %.2f.
"""
from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import EmptyReportError

__all__ = [
    "ConvergenceReport",
    "DecayTable",
    "svg_line_plot",
    "emit_report",
    "emit_decay",
]

_PALETTE = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf"]

_REPORT_COLUMNS = [
    "n", "t_n", "alpha_n", "h",
    "sup_err_median", "sup_err_iqr",
    "l2_err_median", "l2_err_iqr",
    "sup_vs_smoothed_median", "sup_vs_smoothed_iqr",
    "defined_min_frac", "assumption_flags",
]

_DECAY_COLUMNS = [
    "n", "t_n", "alpha_n", "h", "x",
    "smoothing_abs_median", "smoothing_abs_mean",
    "noise_mean", "noise_rms", "noise_stderr",
    "noise_raw_mean", "noise_raw_sq_mean", "noise_raw_stderr",
    "assumption_flags",
]


def _fmt(v) -> str:
    if isinstance(v, str):
        return v
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return f"{float(v):.17g}"


def _write_csv(path: str, columns: list, rows: list) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(",".join(columns) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(row[c]) for c in columns) + "\n")


def _write_json(path: str, obj: dict) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, sort_keys=True, indent=2)
        fh.write("\n")


@dataclass
class ConvergenceReport:
    """Error-vs-n summary of a consistency sweep."""

    plan: dict
    assumptions: dict
    flag_string: str
    rows: list
    per_seed: dict
    curves: dict = field(default_factory=dict)

    def to_json_dict(self) -> dict:
        return {
            "plan": self.plan,
            "assumptions": self.assumptions,
            "rows": self.rows,
            "per_seed": self.per_seed,
            "curves": self.curves,
        }


@dataclass
class DecayTable:
    """Per-n statistics of the decomposition terms at one point."""

    plan: dict
    assumptions: dict
    flag_string: str
    x: float
    rows: list
    slopes: dict
    per_seed: dict

    def to_json_dict(self) -> dict:
        return {
            "plan": self.plan,
            "assumptions": self.assumptions,
            "x": self.x,
            "rows": self.rows,
            "slopes": self.slopes,
            "per_seed": self.per_seed,
        }


def _ticks_log2(lo: float, hi: float) -> list:
    a = int(math.floor(math.log2(lo)))
    b = int(math.ceil(math.log2(hi)))
    step = 1
    while (b - a) // step > 10:
        step += 1
    return [2.0**k for k in range(a, b + 1, step)]


def _ticks_linear(lo: float, hi: float) -> list:
    span = hi - lo
    if span <= 0:
        return [lo]
    raw = span / 5.0
    mag = 10.0 ** math.floor(math.log10(raw))
    for mult in (1.0, 2.0, 2.5, 5.0, 10.0):
        if raw <= mult * mag:
            step = mult * mag
            break
    start = math.ceil(lo / step) * step
    ticks = []
    t = start
    while t <= hi + 1e-12 * max(abs(hi), 1.0):
        ticks.append(t)
        t += step
    return ticks


def svg_line_plot(
    series: list,
    title: str,
    xlabel: str,
    ylabel: str,
    log_x: bool = False,
    log_y: bool = False,
    width: int = 640,
    height: int = 480,
) -> str:
    """Render line series to a standalone SVG string.

    ``series`` is a list of dicts with keys name, x, y (arrays). Points
    with nonfinite coordinates, or nonpositive ones on a log axis, are
    dropped. Output is a pure function of the inputs.
    """
    left, right, top, bottom = 72, 16, 40, 56
    pw = width - left - right
    ph = height - top - bottom

    def tf_x(v):
        return math.log2(v) if log_x else v

    def tf_y(v):
        return math.log2(v) if log_y else v

    pts_all = []
    clean = []
    for s in series:
        xs = np.asarray(s["x"], dtype=float)
        ys = np.asarray(s["y"], dtype=float)
        keep = np.isfinite(xs) & np.isfinite(ys)
        if log_x:
            keep &= xs > 0
        if log_y:
            keep &= ys > 0
        xs, ys = xs[keep], ys[keep]
        clean.append({"name": s["name"], "x": xs, "y": ys})
        pts_all.extend((tf_x(float(a)), tf_y(float(b))) for a, b in zip(xs, ys))
    if not pts_all:
        raise EmptyReportError("nothing plottable: all points dropped")

    xs_t = [p[0] for p in pts_all]
    ys_t = [p[1] for p in pts_all]
    xmin, xmax = min(xs_t), max(xs_t)
    ymin, ymax = min(ys_t), max(ys_t)
    if xmax - xmin < 1e-12:
        xmin, xmax = xmin - 0.5, xmax + 0.5
    if ymax - ymin < 1e-12:
        ymin, ymax = ymin - 0.5, ymax + 0.5
    ypad = 0.05 * (ymax - ymin)
    ymin, ymax = ymin - ypad, ymax + ypad

    def px(v):
        return left + (tf_x(v) - xmin) / (xmax - xmin) * pw

    def py(v):
        return top + ph - (tf_y(v) - ymin) / (ymax - ymin) * ph

    out = []
    out.append(
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">'
    )
    out.append(f'<rect width="{width}" height="{height}" fill="#ffffff"/>')
    out.append(
        f'<text x="{width / 2:.2f}" y="22" text-anchor="middle" '
        f'font-family="sans-serif" font-size="15">{title}</text>'
    )

    if log_x:
        xticks = _ticks_log2(2.0**xmin, 2.0**xmax)
    else:
        xticks = _ticks_linear(xmin, xmax)
    if log_y:
        yticks = _ticks_log2(2.0**ymin, 2.0**ymax)
    else:
        yticks = _ticks_linear(ymin, ymax)

    for t in xticks:
        v = tf_x(t) if log_x else t
        if v < xmin - 1e-9 or v > xmax + 1e-9:
            continue
        x = left + (v - xmin) / (xmax - xmin) * pw
        out.append(
            f'<line x1="{x:.2f}" y1="{top}" x2="{x:.2f}" y2="{top + ph}" '
            f'stroke="#dddddd" stroke-width="1"/>'
        )
        out.append(
            f'<text x="{x:.2f}" y="{top + ph + 18}" text-anchor="middle" '
            f'font-family="sans-serif" font-size="11">{t:.6g}</text>'
        )
    for t in yticks:
        v = tf_y(t) if log_y else t
        if v < ymin - 1e-9 or v > ymax + 1e-9:
            continue
        y = top + ph - (v - ymin) / (ymax - ymin) * ph
        out.append(
            f'<line x1="{left}" y1="{y:.2f}" x2="{left + pw}" y2="{y:.2f}" '
            f'stroke="#dddddd" stroke-width="1"/>'
        )
        out.append(
            f'<text x="{left - 6}" y="{y + 4:.2f}" text-anchor="end" '
            f'font-family="sans-serif" font-size="11">{t:.6g}</text>'
        )

    out.append(
        f'<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" '
        f'stroke="#333333" stroke-width="1"/>'
    )
    out.append(
        f'<text x="{left + pw / 2:.2f}" y="{height - 12}" text-anchor="middle" '
        f'font-family="sans-serif" font-size="13">{xlabel}</text>'
    )
    out.append(
        f'<text x="18" y="{top + ph / 2:.2f}" text-anchor="middle" '
        f'font-family="sans-serif" font-size="13" '
        f'transform="rotate(-90 18 {top + ph / 2:.2f})">{ylabel}</text>'
    )

    for i, s in enumerate(clean):
        color = _PALETTE[i % len(_PALETTE)]
        if s["x"].size == 0:
            continue
        pts = " ".join(f"{px(a):.2f},{py(b):.2f}" for a, b in zip(s["x"], s["y"]))
        out.append(
            f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="1.8"/>'
        )
        ly = top + 14 + 16 * i
        lx = left + pw - 150
        out.append(
            f'<line x1="{lx}" y1="{ly - 4}" x2="{lx + 22}" y2="{ly - 4}" '
            f'stroke="{color}" stroke-width="1.8"/>'
        )
        out.append(
            f'<text x="{lx + 28}" y="{ly}" font-family="sans-serif" '
            f'font-size="11">{s["name"]}</text>'
        )

    out.append("</svg>")
    return "\n".join(out) + "\n"


def emit_report(
    report: ConvergenceReport,
    out_dir: str,
    formats: tuple = ("csv", "json", "svg"),
) -> list:
    """Write report.csv / report.json / error and curve plots; returns the
    written paths. Raises :class:`EmptyReportError` on an empty report."""
    if not report.rows:
        raise EmptyReportError("report has no rows")
    os.makedirs(out_dir, exist_ok=True)
    written = []
    if "csv" in formats:
        p = os.path.join(out_dir, "report.csv")
        rows = [dict(r, assumption_flags=report.flag_string) for r in report.rows]
        _write_csv(p, _REPORT_COLUMNS, rows)
        written.append(p)
    if "json" in formats:
        p = os.path.join(out_dir, "report.json")
        _write_json(p, report.to_json_dict())
        written.append(p)
    if "svg" in formats:
        ns = [r["n"] for r in report.rows]
        err_series = [
            {"name": "sup error (median)", "x": ns, "y": [r["sup_err_median"] for r in report.rows]},
            {"name": "L2 error (median)", "x": ns, "y": [r["l2_err_median"] for r in report.rows]},
            {"name": "sup vs smoothed b", "x": ns, "y": [r["sup_vs_smoothed_median"] for r in report.rows]},
        ]
        p = os.path.join(out_dir, "plot_error_vs_n.svg")
        with open(p, "w", encoding="utf-8") as fh:
            fh.write(
                svg_line_plot(
                    err_series, "Estimation error vs sample size", "n", "error",
                    log_x=True, log_y=True,
                )
            )
        written.append(p)
        if report.curves:
            curve_series = []
            key = max(report.curves, key=lambda k: int(k))
            c = report.curves[key]
            curve_series.append({"name": "true drift", "x": c["x"], "y": c["true"]})
            for k in sorted(report.curves, key=int):
                curve_series.append(
                    {"name": f"estimate, n={k}", "x": report.curves[k]["x"],
                     "y": report.curves[k]["median"]}
                )
            p = os.path.join(out_dir, "plot_curves.svg")
            with open(p, "w", encoding="utf-8") as fh:
                fh.write(
                    svg_line_plot(
                        curve_series, "Median estimate vs true drift", "x", "b(x)",
                    )
                )
            written.append(p)
    return written


def emit_decay(
    table: DecayTable,
    out_dir: str,
    formats: tuple = ("csv", "json", "svg"),
) -> list:
    """Write term_decay.csv / .json / decay plot; returns written paths."""
    if not table.rows:
        raise EmptyReportError("decay table has no rows")
    os.makedirs(out_dir, exist_ok=True)
    written = []
    if "csv" in formats:
        p = os.path.join(out_dir, "term_decay.csv")
        rows = [dict(r, x=table.x, assumption_flags=table.flag_string) for r in table.rows]
        _write_csv(p, _DECAY_COLUMNS, rows)
        written.append(p)
    if "json" in formats:
        p = os.path.join(out_dir, "term_decay.json")
        _write_json(p, table.to_json_dict())
        written.append(p)
    if "svg" in formats:
        ns = [r["n"] for r in table.rows]
        series = [
            {"name": "|smoothing residual|/mass", "x": ns,
             "y": [r["smoothing_abs_median"] for r in table.rows]},
            {"name": "noise term rms", "x": ns, "y": [r["noise_rms"] for r in table.rows]},
        ]
        p = os.path.join(out_dir, "plot_term_decay.svg")
        with open(p, "w", encoding="utf-8") as fh:
            fh.write(
                svg_line_plot(
                    series, "Decomposition terms vs sample size", "n", "magnitude",
                    log_x=True, log_y=True,
                )
            )
        written.append(p)
    return written
