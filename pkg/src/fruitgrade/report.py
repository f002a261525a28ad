"""Report serialization: CSV for round trips, Markdown for reading.

Output bytes are a pure function of the report: cells are pre-sorted,
metadata keys sorted, floats written with shortest round-trip precision
(CSV) or three decimals (Markdown). No timestamps.
"""

from __future__ import annotations

import csv
import io
from pathlib import Path

from .errors import DataError
from .experiments import ExperimentReport, ReportCell

FORMATS = ("csv", "markdown")


def render_report(report: ExperimentReport, fmt: str) -> str:
    if not report.cells:
        raise DataError("refusing to render an empty report")
    if fmt == "csv":
        return _render_csv(report)
    if fmt == "markdown":
        return _render_markdown(report)
    raise DataError(f"unknown report format {fmt!r}")


def write_report(report: ExperimentReport, path: str | Path, fmt: str) -> None:
    Path(path).write_bytes(render_report(report, fmt).encode("utf-8"))


def _render_csv(report: ExperimentReport) -> str:
    buf = io.StringIO()
    for key in sorted(report.metadata):
        buf.write(f"# {key} = {report.metadata[key]}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["classifier", "size", "repetition", "seed", "accuracy"])
    for cell in report.cells:
        writer.writerow(
            [cell.classifier, cell.size, cell.repetition, cell.seed,
             repr(cell.accuracy)]
        )
    return buf.getvalue()


def parse_report_csv(path: str | Path) -> ExperimentReport:
    """Inverse of the CSV renderer."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot read report {path}: {exc}") from exc
    metadata: dict[str, str] = {}
    rows = []
    for line in text.splitlines():
        if line.startswith("# "):
            key, _, value = line[2:].partition(" = ")
            metadata[key] = value
        elif line:
            rows.append(line)
    if not rows or rows[0] != "classifier,size,repetition,seed,accuracy":
        raise DataError(f"{path}: not a report CSV")
    cells = []
    for row in csv.reader(rows[1:]):
        if len(row) != 5:
            raise DataError(f"{path}: malformed report row {row}")
        cells.append(
            ReportCell(
                classifier=row[0],
                size=int(row[1]),
                repetition=int(row[2]),
                seed=int(row[3]),
                accuracy=float(row[4]),
            )
        )
    return ExperimentReport(cells=tuple(cells), metadata=metadata)


def format_cell(mean: float, std: float | None) -> str:
    """Table-cell accuracy: '0.941 ± 0.030', or bare mean for single runs."""
    if std is None:
        return f"{mean:.3f}"
    return f"{mean:.3f} ± {std:.3f}"


def _render_markdown(report: ExperimentReport) -> str:
    agg = report.aggregate()
    sizes = sorted({size for _, size, _, _, _ in agg})
    classifiers = sorted({clf for clf, _, _, _, _ in agg})
    by_key = {(clf, size): (mean, std) for clf, size, mean, std, _ in agg}

    lines = ["# Experiment report", ""]
    for key in sorted(report.metadata):
        lines.append(f"- {key}: {report.metadata[key]}")
    lines.append("")
    if len(sizes) == 1:
        lines.append("| Classifier | Accuracy |")
        lines.append("| --- | --- |")
        for clf in classifiers:
            mean, std = by_key[(clf, sizes[0])]
            lines.append(f"| {clf} | {format_cell(mean, std)} |")
    else:
        header = "| Classifier | " + " | ".join(str(s) for s in sizes) + " |"
        lines.append(header)
        lines.append("| --- |" + " --- |" * len(sizes))
        for clf in classifiers:
            cells = []
            for size in sizes:
                if (clf, size) in by_key:
                    cells.append(format_cell(*by_key[(clf, size)]))
                else:
                    cells.append("-")
            lines.append("| " + clf + " | " + " | ".join(cells) + " |")
    lines.append("")
    return "\n".join(lines)
