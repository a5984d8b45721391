"""Report writers: delimited tables, aligned text tables, and figures.

Every run writes machine-readable CSVs plus a human-facing text table
(4 decimal places, the usual table convention) and a matplotlib figure
rendered to PNG next to them.
"""

from __future__ import annotations

import csv
from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .metrics import METRIC_COLUMNS, MetricVector

ABLATION_EXTRA_COLUMNS = ("acceptance_rate", "mean_rounds")


def format_table(headers: Sequence[str], rows: Sequence[Sequence[object]]) -> str:
    """Aligned text table; floats rendered with 4 decimal places."""
    rendered = [
        [f"{cell:.4f}" if isinstance(cell, float) else str(cell) for cell in row]
        for row in rows
    ]
    widths = [
        max(len(headers[i]), *(len(row[i]) for row in rendered)) if rendered else len(headers[i])
        for i in range(len(headers))
    ]
    lines = ["  ".join(h.ljust(widths[i]) for i, h in enumerate(headers)).rstrip()]
    for row in rendered:
        lines.append("  ".join(cell.ljust(widths[i]) for i, cell in enumerate(row)).rstrip())
    return "\n".join(lines) + "\n"


def write_csv(path: str | Path, headers: Sequence[str], rows: Sequence[Sequence[object]]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(headers)
        writer.writerows(rows)


def write_metrics_csv(path: str | Path, rows: Sequence[tuple[str, MetricVector, bool, int]]) -> None:
    """Per-document metric rows: id, nine metrics, gate outcome, rounds."""
    headers = ("document_id", *METRIC_COLUMNS, "accepted", "rounds_used")
    write_csv(
        path,
        headers,
        [
            (doc_id, *vector.as_tuple(), accepted, rounds)
            for doc_id, vector, accepted, rounds in rows
        ],
    )


def write_summary(
    csv_path: str | Path, txt_path: str | Path, label: str, means: MetricVector | None
) -> None:
    headers = ("label", *METRIC_COLUMNS)
    rows = [(label, *means.as_tuple())] if means is not None else []
    write_csv(csv_path, headers, rows)
    Path(txt_path).write_text(format_table(headers, rows), encoding="utf-8")


def write_ablation(
    csv_path: str | Path,
    txt_path: str | Path,
    rows: Sequence[tuple[str, MetricVector, float, float]],
) -> None:
    """Ablation rows: (label, metric means, acceptance_rate, mean_rounds)."""
    headers = ("label", *METRIC_COLUMNS, *ABLATION_EXTRA_COLUMNS)
    table = [
        (label, *means.as_tuple(), acceptance_rate, mean_rounds)
        for label, means, acceptance_rate, mean_rounds in rows
    ]
    write_csv(csv_path, headers, table)
    Path(txt_path).write_text(format_table(headers, table), encoding="utf-8")


def _save(fig, path: str | Path) -> None:
    # strip volatile PNG metadata so repeated runs stay byte-identical
    fig.savefig(path, metadata={"Software": None})
    plt.close(fig)


def render_summary_figure(means: MetricVector, path: str | Path) -> None:
    """Bar chart of the nine corpus-mean metrics."""
    fig, ax = plt.subplots(figsize=(8, 4.5))
    values = means.as_tuple()
    ax.bar(range(len(METRIC_COLUMNS)), values, color="#4878a8")
    ax.set_xticks(range(len(METRIC_COLUMNS)))
    ax.set_xticklabels(METRIC_COLUMNS, rotation=30, ha="right")
    ax.set_ylabel("score")
    ax.set_title("Corpus-mean summary metrics")
    ax.set_ylim(0, 1.05)
    for x, v in enumerate(values):
        ax.annotate(f"{v:.3f}", (x, v), ha="center", va="bottom", fontsize=8)
    fig.tight_layout()
    _save(fig, path)


def render_ablation_figure(
    rows: Sequence[tuple[float, MetricVector, float, float]], path: str | Path
) -> None:
    """Metric means and acceptance rate as a function of the gate threshold."""
    thresholds = [t for t, _, _, _ in rows]
    fig, (ax_metrics, ax_rate) = plt.subplots(1, 2, figsize=(11, 4.5))
    for i, name in enumerate(METRIC_COLUMNS):
        series = [means.as_tuple()[i] for _, means, _, _ in rows]
        ax_metrics.plot(thresholds, series, marker="o", label=name)
    ax_metrics.set_xlabel("gate threshold")
    ax_metrics.set_ylabel("corpus mean")
    ax_metrics.set_title("Metrics vs. threshold")
    ax_metrics.legend(fontsize=7, ncol=2)

    ax_rate.plot(
        thresholds, [rate for _, _, rate, _ in rows], marker="s", color="#a84848",
        label="acceptance rate",
    )
    ax_rate.plot(
        thresholds,
        [rounds for _, _, _, rounds in rows],
        marker="^",
        color="#48a860",
        label="mean rounds",
    )
    ax_rate.set_xlabel("gate threshold")
    ax_rate.set_title("Loop cost vs. threshold")
    ax_rate.legend(fontsize=8)
    fig.tight_layout()
    _save(fig, path)
