"""The generate -> judge -> gate -> feedback refinement loop.

One loop instance is strictly sequential: round k's prompt depends on
round k-1's gate decision. Batches run document loops concurrently;
traces come back in input order and per-document failures stay isolated.
"""

from __future__ import annotations

import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Sequence

from .backends import BackendError, BackendSpec, CompletionRequest, complete, generate_summary
from .corpus import Document
from .dimensions import DIMENSIONS
from .judge import (
    GateDecision,
    MalformedReportError,
    ScoreReport,
    decision_to_dict,
    gate,
    heuristic_consistency,
    parse_score_report,
    report_from_dict,
    report_to_dict,
)
from .prompts import (
    PromptBundle,
    PromptConfig,
    append_feedback,
    compose_feedback_fragments,
    compose_generation_prompt,
    render_judge_prompt,
)

logger = logging.getLogger(__name__)

DEFAULT_THRESHOLD = 8.8
DEFAULT_MAX_ROUNDS = 5


@dataclass
class LoopConfig:
    generator: BackendSpec
    evaluator: BackendSpec
    prompt_config: PromptConfig = field(default_factory=PromptConfig)
    threshold: float = DEFAULT_THRESHOLD
    max_rounds: int = DEFAULT_MAX_ROUNDS
    accumulate_feedback: bool = False  # union failing dimensions across rounds

    def __post_init__(self) -> None:
        if not 1.0 <= self.threshold <= 10.0:
            raise ValueError("threshold must lie in [1, 10]")
        if self.max_rounds < 1:
            raise ValueError("max_rounds must be >= 1")


@dataclass
class RoundRecord:
    round_index: int
    prompt: PromptBundle
    candidate: str
    report: ScoreReport | None = None
    decision: GateDecision | None = None
    parse_error: str | None = None


@dataclass
class LoopTrace:
    document_id: str
    rounds: list[RoundRecord]
    final_candidate: str
    accepted: bool
    rounds_used: int
    error: str | None = None


def _judge_candidate(evaluator: BackendSpec, source: str, candidate: str) -> str:
    request = CompletionRequest(
        system_text="",
        user_text=render_judge_prompt(source, candidate),
        max_output_tokens=evaluator.max_output_tokens,
    )
    return complete(evaluator, request)


def _attach_heuristic(report: ScoreReport, candidate: str, source: str) -> None:
    try:
        report.heuristic_consistency = heuristic_consistency(candidate, source)
    except ValueError as exc:
        logger.warning("heuristic consistency unavailable: %s", exc)


def _pick_final(rounds: Sequence[RoundRecord], accepted: bool) -> str:
    if not rounds:
        return ""
    if accepted:
        return rounds[-1].candidate
    best = None
    best_score = float("-inf")
    for record in rounds:
        if record.report is None:
            continue
        score = record.report.mean_score()
        if score > best_score:  # strict: ties keep the earliest round
            best = record
            best_score = score
    if best is None:
        return rounds[0].candidate
    return best.candidate


def run_challenge(doc: Document, config: LoopConfig) -> LoopTrace:
    """Refine one document until the gate accepts or the round cap is hit.

    Round 1 uses the base prompt; round k appends improvement fragments
    for round k-1's failing dimensions. A malformed judge report consumes
    a round with every dimension treated as failing. Backend failures
    abort the trace, preserving the rounds completed so far.
    """
    base = compose_generation_prompt(config.prompt_config)
    rounds: list[RoundRecord] = []
    failing_prev: frozenset[str] = frozenset()
    accumulated: set[str] = set()
    accepted = False
    error: str | None = None

    for round_index in range(1, config.max_rounds + 1):
        if round_index == 1:
            bundle = base
        else:
            target = accumulated if config.accumulate_feedback else failing_prev
            fragments = compose_feedback_fragments(target, config.prompt_config)
            bundle = append_feedback(base, fragments)

        try:
            candidate = generate_summary(config.generator, bundle, doc.source)
        except BackendError as exc:
            error = f"generator: {exc}"
            break

        record = RoundRecord(round_index=round_index, prompt=bundle, candidate=candidate)
        rounds.append(record)

        try:
            raw = _judge_candidate(config.evaluator, doc.source, candidate)
        except BackendError as exc:
            error = f"evaluator: {exc}"
            break

        try:
            report = parse_score_report(raw)
        except MalformedReportError as exc:
            record.parse_error = str(exc)
            failing_prev = frozenset(DIMENSIONS)
            accumulated.update(DIMENSIONS)
            continue

        _attach_heuristic(report, candidate, doc.source)
        decision = gate(report, config.threshold)
        record.report = report
        record.decision = decision
        failing_prev = decision.failing_dimensions
        accumulated.update(decision.failing_dimensions)
        if decision.accepted:
            accepted = True
            break

    return LoopTrace(
        document_id=doc.id,
        rounds=rounds,
        final_candidate=_pick_final(rounds, accepted),
        accepted=accepted,
        rounds_used=len(rounds),
        error=error,
    )


BackendFactory = Callable[[Document], tuple[BackendSpec, BackendSpec]]


def run_batch(
    docs: Sequence[Document],
    config: LoopConfig,
    parallelism: int = 1,
    backends_for: BackendFactory | None = None,
) -> list[LoopTrace]:
    """Run the loop over many documents, one trace per document in input order.

    ``backends_for`` optionally supplies per-document (generator,
    evaluator) specs -- scripted runs use it so concurrent documents never
    share a response queue. Unexpected per-document errors become
    error-status traces instead of failing the batch.
    """
    if parallelism < 1:
        raise ValueError("parallelism must be >= 1")
    if not docs:
        return []

    def one(doc: Document) -> LoopTrace:
        doc_config = config
        if backends_for is not None:
            generator, evaluator = backends_for(doc)
            doc_config = LoopConfig(
                generator=generator,
                evaluator=evaluator,
                prompt_config=config.prompt_config,
                threshold=config.threshold,
                max_rounds=config.max_rounds,
                accumulate_feedback=config.accumulate_feedback,
            )
        try:
            return run_challenge(doc, doc_config)
        except Exception as exc:  # noqa: BLE001 -- isolate per-document failures
            logger.exception("loop failed for document %s", doc.id)
            return LoopTrace(
                document_id=doc.id,
                rounds=[],
                final_candidate="",
                accepted=False,
                rounds_used=0,
                error=f"internal: {exc}",
            )

    if parallelism == 1:
        return [one(doc) for doc in docs]
    with ThreadPoolExecutor(max_workers=parallelism) as pool:
        return list(pool.map(one, docs))


def _bundle_to_dict(bundle: PromptBundle) -> dict:
    return {
        "target_fragment": bundle.target_fragment,
        "length_fragment": bundle.length_fragment,
        "style_fragment": bundle.style_fragment,
        "feedback_fragments": list(bundle.feedback_fragments),
        "composed": bundle.composed,
    }


def trace_to_dict(trace: LoopTrace) -> dict:
    return {
        "document_id": trace.document_id,
        "accepted": trace.accepted,
        "rounds_used": trace.rounds_used,
        "final_candidate": trace.final_candidate,
        "error": trace.error,
        "rounds": [
            {
                "round_index": r.round_index,
                "prompt": _bundle_to_dict(r.prompt),
                "candidate": r.candidate,
                "report": report_to_dict(r.report) if r.report else None,
                "decision": decision_to_dict(r.decision) if r.decision else None,
                "parse_error": r.parse_error,
            }
            for r in trace.rounds
        ],
    }


def trace_from_dict(data: dict) -> LoopTrace:
    rounds = []
    for r in data["rounds"]:
        prompt = PromptBundle(
            target_fragment=r["prompt"]["target_fragment"],
            length_fragment=r["prompt"]["length_fragment"],
            style_fragment=r["prompt"]["style_fragment"],
            feedback_fragments=tuple(r["prompt"]["feedback_fragments"]),
            composed=r["prompt"]["composed"],
        )
        decision = None
        if r["decision"] is not None:
            decision = GateDecision(
                accepted=r["decision"]["accepted"],
                failing_dimensions=frozenset(r["decision"]["failing_dimensions"]),
                threshold=r["decision"]["threshold"],
            )
        rounds.append(
            RoundRecord(
                round_index=r["round_index"],
                prompt=prompt,
                candidate=r["candidate"],
                report=report_from_dict(r["report"]) if r["report"] else None,
                decision=decision,
                parse_error=r["parse_error"],
            )
        )
    return LoopTrace(
        document_id=data["document_id"],
        rounds=rounds,
        final_candidate=data["final_candidate"],
        accepted=data["accepted"],
        rounds_used=data["rounds_used"],
        error=data["error"],
    )


def write_traces_jsonl(traces: Iterable[LoopTrace], path: str | Path) -> None:
    """Write one trace per line, UTF-8 JSON."""
    with open(path, "w", encoding="utf-8") as handle:
        for trace in traces:
            handle.write(json.dumps(trace_to_dict(trace), ensure_ascii=False))
            handle.write("\n")


def read_traces_jsonl(path: str | Path) -> list[LoopTrace]:
    with open(path, encoding="utf-8") as handle:
        return [trace_from_dict(json.loads(line)) for line in handle if line.strip()]
