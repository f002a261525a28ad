"""Embedding views: 2-D class scatter and per-class 1-D density, as
standalone SVG 1.1 plus CSV data.

All output bytes are pure functions of the inputs: coordinates are
formatted at fixed precision and classes are drawn in a stable order.
Plots use a fixed 800x600 viewBox; class colors cycle through PALETTE.
"""

from __future__ import annotations

import csv
import io
from pathlib import Path

import numpy as np

from .errors import DataError

PALETTE = (
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
    "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf",
)

WIDTH, HEIGHT = 800, 600
MARGIN = 60


def class_color(index: int) -> str:
    return PALETTE[index % len(PALETTE)]


def _fmt(x: float) -> str:
    return f"{x:.2f}"


def _svg_header() -> list[str]:
    return [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}">',
        f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
    ]


def _axes(x_lo, x_hi, y_lo, y_hi) -> list[str]:
    left, right = MARGIN, WIDTH - MARGIN
    top, bottom = MARGIN, HEIGHT - MARGIN
    parts = [
        f'<line x1="{left}" y1="{bottom}" x2="{right}" y2="{bottom}" stroke="black"/>',
        f'<line x1="{left}" y1="{top}" x2="{left}" y2="{bottom}" stroke="black"/>',
        f'<text x="{left}" y="{bottom + 20}" font-size="12">{_fmt(x_lo)}</text>',
        f'<text x="{right - 40}" y="{bottom + 20}" font-size="12">{_fmt(x_hi)}</text>',
        f'<text x="{left - 50}" y="{bottom}" font-size="12">{_fmt(y_lo)}</text>',
        f'<text x="{left - 50}" y="{top + 10}" font-size="12">{_fmt(y_hi)}</text>',
    ]
    return parts


def _legend(class_names) -> list[str]:
    parts = []
    for i, name in enumerate(class_names):
        y = MARGIN + 18 * i
        parts.append(
            f'<rect x="{WIDTH - MARGIN - 150}" y="{y}" width="12" height="12" '
            f'fill="{class_color(i)}" class="legend-swatch"/>'
        )
        parts.append(
            f'<text x="{WIDTH - MARGIN - 132}" y="{y + 11}" font-size="13">{name}</text>'
        )
    return parts


def _span(values: np.ndarray) -> tuple[float, float]:
    lo, hi = float(values.min()), float(values.max())
    if hi - lo < 1e-12:
        lo, hi = lo - 1.0, hi + 1.0
    pad = 0.05 * (hi - lo)
    return lo - pad, hi + pad


def emit_scatter_2d(sample_ids, labels, scores: np.ndarray, out) -> tuple[Path, Path]:
    """Write `<out>.svg` and `<out>.csv` of the first two score columns.

    CSV columns: sample_id,label,pc0,pc1. One color per class, legend in
    class order.
    """
    scores = np.asarray(scores, dtype=np.float64)
    labels = list(labels)
    sample_ids = list(sample_ids)
    if not labels or not sample_ids:
        raise DataError("scatter needs at least one labeled sample")
    if scores.ndim != 2 or scores.shape[1] < 2:
        raise DataError("scatter needs at least two score columns")
    if not (len(labels) == len(sample_ids) == scores.shape[0]):
        raise DataError("ids, labels, and scores disagree in length")
    class_names = sorted(set(labels))
    color_of = {name: class_color(i) for i, name in enumerate(class_names)}

    out = Path(out)
    csv_path = out.with_suffix(".csv")
    svg_path = out.with_suffix(".svg")

    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["sample_id", "label", "pc0", "pc1"])
    for sid, label, row in zip(sample_ids, labels, scores):
        writer.writerow([sid, label, repr(float(row[0])), repr(float(row[1]))])
    csv_path.write_bytes(buf.getvalue().encode("utf-8"))

    x_lo, x_hi = _span(scores[:, 0])
    y_lo, y_hi = _span(scores[:, 1])

    def sx(v):
        return MARGIN + (v - x_lo) / (x_hi - x_lo) * (WIDTH - 2 * MARGIN)

    def sy(v):
        return HEIGHT - MARGIN - (v - y_lo) / (y_hi - y_lo) * (HEIGHT - 2 * MARGIN)

    parts = _svg_header()
    parts += _axes(x_lo, x_hi, y_lo, y_hi)
    for sid, label, row in zip(sample_ids, labels, scores):
        parts.append(
            f'<circle cx="{_fmt(sx(row[0]))}" cy="{_fmt(sy(row[1]))}" r="3" '
            f'fill="{color_of[label]}" fill-opacity="0.75"/>'
        )
    parts += _legend(class_names)
    parts.append("</svg>")
    svg_path.write_bytes("\n".join(parts).encode("utf-8"))
    return svg_path, csv_path


def class_histograms(values: np.ndarray, labels, bins: int):
    """Per-class densities over a shared bin grid.

    Returns (edges, {class: density}) with each density integrating to 1.
    """
    values = np.asarray(values, dtype=np.float64).ravel()
    labels = list(labels)
    if bins < 2:
        raise DataError("need at least 2 bins")
    if not labels or len(labels) != len(values):
        raise DataError("labels and values disagree in length")
    lo, hi = float(values.min()), float(values.max())
    if hi - lo < 1e-12:
        lo, hi = lo - 0.5, hi + 0.5
    edges = np.linspace(lo, hi, bins + 1)
    dens = {}
    for name in sorted(set(labels)):
        mask = np.array([l == name for l in labels])
        counts, _ = np.histogram(values[mask], bins=edges)
        total = counts.sum()
        width = edges[1] - edges[0]
        dens[name] = counts / (total * width) if total else counts.astype(np.float64)
    return edges, dens


def histogram_overlap(values: np.ndarray, labels, bins: int = 50) -> float:
    """Overlap area of the two per-class densities, in [0, 1].

    1 means identical distributions, 0 means fully separated. Exactly two
    classes are required.
    """
    edges, dens = class_histograms(values, labels, bins)
    if len(dens) != 2:
        raise DataError(f"overlap needs exactly 2 classes, got {len(dens)}")
    width = edges[1] - edges[0]
    a, b = dens.values()
    return float(np.minimum(a, b).sum() * width)


def emit_density_1d(values: np.ndarray, labels, bins: int, out) -> tuple[Path, Path]:
    """Write `<out>.svg` and `<out>.csv` of per-class histograms of one
    score column over a shared bin grid."""
    edges, dens = class_histograms(values, labels, bins)
    class_names = sorted(dens)
    out = Path(out)
    csv_path = out.with_suffix(".csv")
    svg_path = out.with_suffix(".svg")

    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["bin_lo", "bin_hi"] + class_names)
    for i in range(len(edges) - 1):
        writer.writerow(
            [repr(float(edges[i])), repr(float(edges[i + 1]))]
            + [repr(float(dens[name][i])) for name in class_names]
        )
    csv_path.write_bytes(buf.getvalue().encode("utf-8"))

    peak = max(float(d.max()) for d in dens.values()) or 1.0
    x_lo, x_hi = float(edges[0]), float(edges[-1])

    def sx(v):
        return MARGIN + (v - x_lo) / (x_hi - x_lo) * (WIDTH - 2 * MARGIN)

    def sy(v):
        return HEIGHT - MARGIN - (v / (peak * 1.05)) * (HEIGHT - 2 * MARGIN)

    parts = _svg_header()
    parts += _axes(x_lo, x_hi, 0.0, peak)
    for i, name in enumerate(class_names):
        pts = [f"{_fmt(sx(x_lo))},{_fmt(sy(0.0))}"]
        for j in range(len(edges) - 1):
            d = float(dens[name][j])
            pts.append(f"{_fmt(sx(edges[j]))},{_fmt(sy(d))}")
            pts.append(f"{_fmt(sx(edges[j + 1]))},{_fmt(sy(d))}")
        pts.append(f"{_fmt(sx(x_hi))},{_fmt(sy(0.0))}")
        parts.append(
            f'<polyline points="{" ".join(pts)}" fill="none" '
            f'stroke="{class_color(i)}" stroke-width="2"/>'
        )
    parts += _legend(class_names)
    parts.append("</svg>")
    svg_path.write_bytes("\n".join(parts).encode("utf-8"))
    return svg_path, csv_path
