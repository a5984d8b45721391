"""Experiment orchestration behind the CLI: runs, sweeps, and file scoring."""

from __future__ import annotations

import json
import logging
import os
import statistics
from dataclasses import dataclass, replace
from pathlib import Path

from .backends import BackendSpec, ScriptedMock
from .config import ConfigError, ExperimentConfig
from .corpus import Document, load_corpus, subsample
from .loop import LoopTrace, run_batch, write_traces_jsonl
from .metrics import METRIC_COLUMNS, MetricVector, evaluate_pair, mean_vector
from .reporting import (
    render_ablation_figure,
    render_summary_figure,
    write_ablation,
    write_csv,
    write_metrics_csv,
    write_summary,
)

logger = logging.getLogger(__name__)

DEFAULT_SWEEP_THRESHOLDS = (8.0, 8.2, 8.4, 8.6, 8.8)


def threshold_label(threshold: float) -> str:
    """Row label for one sweep threshold, e.g. ``TS=8.0``."""
    if round(threshold, 1) == threshold:
        return f"TS={threshold:.1f}"
    return f"TS={threshold:g}"


class MockScript:
    """Per-document scripted responses loaded from a JSONL file.

    Each line is an object with the document ``id`` and ``generator`` /
    ``evaluator`` response lists; a line holding a ``default`` object
    covers documents without their own entry. Every document gets fresh
    mock queues, so batches stay deterministic at any parallelism.
    """

    def __init__(self, entries: dict[str, dict], default: dict | None = None):
        self._entries = entries
        self._default = default

    @classmethod
    def load(cls, path: str | Path) -> "MockScript":
        entries: dict[str, dict] = {}
        default = None
        try:
            lines = Path(path).read_text(encoding="utf-8").splitlines()
        except OSError as exc:
            raise ConfigError(f"cannot read mock script {path}: {exc}") from exc
        for line_no, line in enumerate(lines, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except ValueError as exc:
                raise ConfigError(
                    f"mock script line {line_no} is not valid JSON: {exc}"
                ) from exc
            if "default" in record:
                default = record["default"]
            elif "id" in record:
                entries[str(record["id"])] = record
            else:
                raise ConfigError(
                    f"mock script line {line_no} needs an 'id' or 'default' key"
                )
        return cls(entries, default)

    def backends_for(self, doc: Document) -> tuple[BackendSpec, BackendSpec]:
        entry = self._entries.get(doc.id, self._default)
        if entry is None:
            raise ConfigError(f"mock script has no entry for document {doc.id!r}")
        generator = BackendSpec(
            kind="scripted_mock",
            mock=ScriptedMock([str(r) for r in entry.get("generator", [])]),
        )
        evaluator = BackendSpec(
            kind="scripted_mock",
            mock=ScriptedMock([str(r) for r in entry.get("evaluator", [])]),
        )
        return generator, evaluator


@dataclass
class RunResult:
    traces: list[LoopTrace]
    metric_rows: list[tuple[str, MetricVector, bool, int]]
    means: MetricVector | None
    acceptance_rate: float
    mean_rounds: float
    errored: int


def _resolve_parallelism(config: ExperimentConfig) -> int:
    parallel = config.parallel or os.cpu_count() or 1
    for spec in (config.loop.generator, config.loop.evaluator):
        if spec.max_concurrency is not None:
            parallel = min(parallel, spec.max_concurrency)
    return max(1, parallel)


def _check_backends(config: ExperimentConfig, mock_script: MockScript | None) -> None:
    if mock_script is not None:
        return
    for label, spec in (
        ("generator", config.loop.generator),
        ("evaluator", config.loop.evaluator),
    ):
        if spec.kind == "scripted_mock" and spec.mock is None:
            raise ConfigError(
                f"no {label} backend configured and no --mock script given"
            )


def load_documents(config: ExperimentConfig) -> list[Document]:
    docs = load_corpus(
        config.corpus.path,
        config.corpus.format,
        config.corpus.field_map,
        dataset_tag=config.corpus.dataset,
        max_errors=config.corpus.max_errors,
    )
    return subsample(docs, config.sample_cap, config.seed)


def run_experiment(
    config: ExperimentConfig,
    mock_script: MockScript | None = None,
    label: str = "run",
) -> RunResult:
    """Execute one full experiment and write its report files.

    Outputs under ``config.output_dir``: traces.jsonl, metrics.csv,
    summary.csv, summary.txt, summary.png.
    """
    _check_backends(config, mock_script)
    docs = load_documents(config)
    out_dir = Path(config.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    traces = run_batch(
        docs,
        config.loop,
        parallelism=_resolve_parallelism(config),
        backends_for=mock_script.backends_for if mock_script else None,
    )
    write_traces_jsonl(traces, out_dir / "traces.jsonl")

    embedder = config.embedder.build()
    by_id = {doc.id: doc for doc in docs}
    metric_rows: list[tuple[str, MetricVector, bool, int]] = []
    skipped = 0
    for trace in traces:
        doc = by_id[trace.document_id]
        if trace.error is not None or not trace.final_candidate:
            skipped += 1
            continue
        if doc.reference_summary is None:
            skipped += 1
            continue
        vector = evaluate_pair(trace.final_candidate, doc.reference_summary, embedder)
        metric_rows.append((trace.document_id, vector, trace.accepted, trace.rounds_used))
    if skipped:
        logger.warning("skipped %d document(s) without a scoreable candidate/reference", skipped)

    means = mean_vector([row[1] for row in metric_rows]) if metric_rows else None
    write_metrics_csv(out_dir / "metrics.csv", metric_rows)
    write_summary(out_dir / "summary.csv", out_dir / "summary.txt", label, means)
    if means is not None:
        render_summary_figure(means, out_dir / "summary.png")

    acceptance_rate = (
        sum(1 for t in traces if t.accepted) / len(traces) if traces else 0.0
    )
    mean_rounds = (
        statistics.fmean(t.rounds_used for t in traces) if traces else 0.0
    )
    return RunResult(
        traces=traces,
        metric_rows=metric_rows,
        means=means,
        acceptance_rate=acceptance_rate,
        mean_rounds=mean_rounds,
        errored=sum(1 for t in traces if t.error is not None),
    )


@dataclass
class AblationRow:
    threshold: float
    label: str
    means: MetricVector | None
    acceptance_rate: float
    mean_rounds: float
    errored: int


def run_sweep(
    config: ExperimentConfig,
    thresholds=DEFAULT_SWEEP_THRESHOLDS,
    mock_script: MockScript | None = None,
) -> list[AblationRow]:
    """Run the experiment once per threshold (ascending) and write the ablation table.

    Per-threshold artifacts land in ``threshold_<t>/`` subdirectories; the
    combined table goes to ablation.csv / ablation.txt / ablation.png in
    the sweep's output directory.
    """
    thresholds = sorted(set(thresholds))
    if not thresholds:
        raise ConfigError("sweep needs at least one threshold")
    for t in thresholds:
        if not 1.0 <= t <= 10.0:
            raise ConfigError(f"threshold {t} outside [1, 10]")

    out_dir = Path(config.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    rows: list[AblationRow] = []
    for threshold in thresholds:
        label = threshold_label(threshold)
        sub_config = replace(
            config,
            loop=replace(config.loop, threshold=threshold),
            output_dir=str(out_dir / f"threshold_{label.removeprefix('TS=')}"),
        )
        result = run_experiment(sub_config, mock_script=mock_script, label=label)
        rows.append(
            AblationRow(
                threshold=threshold,
                label=label,
                means=result.means,
                acceptance_rate=result.acceptance_rate,
                mean_rounds=result.mean_rounds,
                errored=result.errored,
            )
        )

    zero = MetricVector(*([0.0] * 9))
    table = [
        (row.label, row.means if row.means is not None else zero,
         row.acceptance_rate, row.mean_rounds)
        for row in rows
    ]
    write_ablation(out_dir / "ablation.csv", out_dir / "ablation.txt", table)
    render_ablation_figure(
        [(row.threshold, means, rate, rounds) for row, (_, means, rate, rounds) in zip(rows, table)],
        out_dir / "ablation.png",
    )
    return rows


def score_files(
    candidates_path: str | Path,
    references_path: str | Path,
    embedder,
    output_dir: str | Path,
) -> list[tuple[str, MetricVector]]:
    """Score line-paired candidate/reference files; writes scores.csv.

    Returns the per-pair rows; a final ``mean`` row is appended to the CSV
    when there is at least one pair.
    """
    candidates = Path(candidates_path).read_text(encoding="utf-8").splitlines()
    references = Path(references_path).read_text(encoding="utf-8").splitlines()
    if len(candidates) != len(references):
        raise ConfigError(
            f"length mismatch: {len(candidates)} candidates vs {len(references)} references"
        )
    rows = [
        (str(i), evaluate_pair(cand, ref, embedder))
        for i, (cand, ref) in enumerate(zip(candidates, references), start=1)
    ]
    out_dir = Path(output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    table: list[tuple] = [(pair_id, *vector.as_tuple()) for pair_id, vector in rows]
    if rows:
        table.append(("mean", *mean_vector([v for _, v in rows]).as_tuple()))
    write_csv(out_dir / "scores.csv", ("pair", *METRIC_COLUMNS), table)
    return rows
