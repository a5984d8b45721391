"""Score-report parsing, diagnostic heuristics, and the acceptance gate.

The evaluator backend is asked to reply with a single JSON object keyed by
the seven dimension names (1-10 scale), optionally with per-sentence score
arrays. ``parse_score_report`` tolerates surrounding prose by scanning for
the first balanced JSON object that actually validates as a report.
"""

from __future__ import annotations

import json
import logging
import statistics
from dataclasses import dataclass, field

from .corpus import tokenize
from .dimensions import DIMENSIONS, canonical_dimension, ordered

logger = logging.getLogger(__name__)

SCORE_MIN = 1.0
SCORE_MAX = 10.0


class MalformedReportError(Exception):
    """The judge's output contains no parsable seven-dimension report."""


class EmptySummaryError(ValueError):
    """A per-sentence aggregation was asked for zero sentences."""


@dataclass
class ScoreReport:
    """Seven dimension scores plus diagnostic extras.

    ``heuristic_consistency`` is the word-overlap diagnostic on [0,1],
    filled in by the loop (it needs the source text, which the judge
    response alone does not carry). Parse warnings (clamped values,
    ignored malformed extras) never affect equality.
    """

    scores: dict[str, float]
    per_sentence_fluency: list[float] = field(default_factory=list)
    per_sentence_naturalness: list[float] = field(default_factory=list)
    heuristic_consistency: float | None = None
    warnings: list[str] = field(default_factory=list, compare=False)

    def __post_init__(self) -> None:
        missing = [d for d in DIMENSIONS if d not in self.scores]
        if missing:
            raise ValueError(f"report lacks dimensions: {missing}")
        for dim, value in self.scores.items():
            if not SCORE_MIN <= value <= SCORE_MAX:
                raise ValueError(f"{dim} score {value} outside [1, 10]")
        for name, values in (
            ("Fluency", self.per_sentence_fluency),
            ("Naturalness", self.per_sentence_naturalness),
        ):
            if values:
                if any(not SCORE_MIN <= v <= SCORE_MAX for v in values):
                    raise ValueError(f"per-sentence {name} score outside [1, 10]")
                if abs(self.scores[name] - statistics.fmean(values)) > 1e-9:
                    raise ValueError(
                        f"{name} score disagrees with its per-sentence mean"
                    )
        if self.heuristic_consistency is not None and not (
            0.0 <= self.heuristic_consistency <= 1.0
        ):
            raise ValueError("heuristic_consistency outside [0, 1]")

    def mean_score(self) -> float:
        return statistics.fmean(self.scores[d] for d in DIMENSIONS)


@dataclass(frozen=True)
class GateDecision:
    accepted: bool
    failing_dimensions: frozenset[str]
    threshold: float

    def __post_init__(self) -> None:
        if self.accepted != (not self.failing_dimensions):
            raise ValueError("accepted must mirror an empty failing set")


def aggregate_sentence_scores(per_sentence: list[float]) -> float:
    """Arithmetic mean of per-sentence scores on the 1-10 scale."""
    if not per_sentence:
        raise EmptySummaryError("no sentences to aggregate")
    if any(not SCORE_MIN <= v <= SCORE_MAX for v in per_sentence):
        raise ValueError("per-sentence scores must lie in [1, 10]")
    return statistics.fmean(per_sentence)


def heuristic_consistency(candidate: str, source: str) -> float:
    """Share of the source's unique words that also occur in the candidate.

    Set semantics on the shared tokenizer, so the value is invariant under
    token reordering and duplication. Recorded as a diagnostic; never used
    to gate on its own (its [0,1] range is incommensurate with the 1-10
    dimension scale).
    """
    source_tokens = set(tokenize(source))
    if not source_tokens:
        raise ValueError("source text has no tokens")
    candidate_tokens = set(tokenize(candidate))
    return len(candidate_tokens & source_tokens) / len(source_tokens)


def gate(report: ScoreReport, threshold: float) -> GateDecision:
    """Apply the per-dimension acceptance gate (scores equal to the threshold pass)."""
    if not SCORE_MIN <= threshold <= SCORE_MAX:
        raise ValueError("threshold must lie in [1, 10]")
    failing = frozenset(d for d in DIMENSIONS if report.scores[d] < threshold)
    return GateDecision(
        accepted=not failing, failing_dimensions=failing, threshold=threshold
    )


def _iter_balanced_objects(text: str):
    """Yield every balanced {...} region, string- and escape-aware."""
    search_from = 0
    while True:
        start = text.find("{", search_from)
        if start == -1:
            return
        depth = 0
        in_string = False
        escaped = False
        for i in range(start, len(text)):
            ch = text[i]
            if in_string:
                if escaped:
                    escaped = False
                elif ch == "\\":
                    escaped = True
                elif ch == '"':
                    in_string = False
            elif ch == '"':
                in_string = True
            elif ch == "{":
                depth += 1
            elif ch == "}":
                depth -= 1
                if depth == 0:
                    yield text[start : i + 1]
                    break
        search_from = start + 1


def _clamp(value: float, label: str, warnings: list[str]) -> float:
    if value < SCORE_MIN:
        warnings.append(f"{label} score {value} clamped to {SCORE_MIN}")
        return SCORE_MIN
    if value > SCORE_MAX:
        warnings.append(f"{label} score {value} clamped to {SCORE_MAX}")
        return SCORE_MAX
    return value


def _as_number(value) -> float | None:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        return None
    return float(value)


def _coerce_report(obj: dict) -> ScoreReport | None:
    by_fold = {}
    for key, value in obj.items():
        if isinstance(key, str):
            by_fold.setdefault(key.casefold(), value)

    warnings: list[str] = []
    scores: dict[str, float] = {}
    for dim in DIMENSIONS:
        value = _as_number(by_fold.get(dim.casefold()))
        if value is None:
            return None
        scores[dim] = _clamp(value, dim, warnings)

    per_sentence: dict[str, list[float]] = {}
    for dim, key in (("Fluency", "per_sentence_fluency"),
                     ("Naturalness", "per_sentence_naturalness")):
        raw = by_fold.get(key)
        if raw is None:
            continue
        if not isinstance(raw, list):
            warnings.append(f"ignoring non-array {key}")
            continue
        values = [_as_number(v) for v in raw]
        if any(v is None for v in values):
            warnings.append(f"ignoring {key} with non-numeric entries")
            continue
        clamped = [_clamp(v, f"{key}[{i}]", warnings) for i, v in enumerate(values)]
        if clamped:
            per_sentence[dim] = clamped
            # the scalar dimension score is defined as the sentence mean
            scores[dim] = statistics.fmean(clamped)

    return ScoreReport(
        scores=scores,
        per_sentence_fluency=per_sentence.get("Fluency", []),
        per_sentence_naturalness=per_sentence.get("Naturalness", []),
        warnings=warnings,
    )


def parse_score_report(raw: str) -> ScoreReport:
    """Extract a seven-dimension score report from the judge's raw output.

    Scans for balanced JSON objects (prose around or between them is
    fine), keys are matched case-insensitively, and out-of-range scores
    are clamped to [1, 10] with a warning recorded on the report.
    """
    for segment in _iter_balanced_objects(raw):
        try:
            obj = json.loads(segment)
        except ValueError:
            continue
        if not isinstance(obj, dict):
            continue
        report = _coerce_report(obj)
        if report is not None:
            for message in report.warnings:
                logger.warning("judge report: %s", message)
            return report
    raise MalformedReportError(
        "no JSON object with all seven dimension scores found in judge output"
    )


def render_score_report(report: ScoreReport) -> str:
    """Serialize a report to the documented judge output format."""
    payload: dict[str, object] = {d: report.scores[d] for d in DIMENSIONS}
    if report.per_sentence_fluency:
        payload["per_sentence_fluency"] = list(report.per_sentence_fluency)
    if report.per_sentence_naturalness:
        payload["per_sentence_naturalness"] = list(report.per_sentence_naturalness)
    return json.dumps(payload, ensure_ascii=False)


def report_to_dict(report: ScoreReport) -> dict:
    """JSON-friendly view of a report, used in trace files."""
    return {
        "scores": {d: report.scores[d] for d in DIMENSIONS},
        "per_sentence_fluency": list(report.per_sentence_fluency),
        "per_sentence_naturalness": list(report.per_sentence_naturalness),
        "heuristic_consistency": report.heuristic_consistency,
    }


def decision_to_dict(decision: GateDecision) -> dict:
    return {
        "accepted": decision.accepted,
        "failing_dimensions": ordered(decision.failing_dimensions),
        "threshold": decision.threshold,
    }


def report_from_dict(data: dict) -> ScoreReport:
    return ScoreReport(
        scores={canonical_dimension(k) or k: float(v) for k, v in data["scores"].items()},
        per_sentence_fluency=[float(v) for v in data.get("per_sentence_fluency", [])],
        per_sentence_naturalness=[float(v) for v in data.get("per_sentence_naturalness", [])],
        heuristic_consistency=data.get("heuristic_consistency"),
    )
