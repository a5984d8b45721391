"""Deterministic prompt composition for the generate/judge loop.

Generation prompts are built from three fixed fragments (task target,
length cap, style) plus per-dimension improvement fragments appended when
a previous round failed the gate. All composition is byte-deterministic:
fragments joined by single spaces, improvement fragments in dimension
order.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from .dimensions import DIMENSION_SET, DIMENSIONS, ordered

TARGET_LITERAL = "Summarize the following text to highlight key points:"
LENGTH_TEMPLATE = "The summary should not exceed {max_words} words."
DEFAULT_STYLE_LITERAL = "The summary should be written in a concise and formal style."

#: Fixed improvement instructions for the three dimensions that have
#: dedicated wording. The Naturalness string is kept as-is on purpose
#: (sic); its exact bytes are pinned.
FEEDBACK_LITERALS: dict[str, str] = {
    "Consistency": "Ensure all key points are included in the summary.",
    "Fluency": "Rewrite the summary with more natural sentence structures.",
    "Naturalness": "Make the language more naturalness and concise.",
}

#: The remaining dimensions share a generic improvement template.
GENERIC_FEEDBACK_TEMPLATE = "Improve the {dimension} of the summary."


@dataclass(frozen=True)
class PromptConfig:
    """Fixed inputs to prompt composition.

    ``max_summary_words`` is the word cap embedded in the length fragment.
    All literals can be overridden (e.g. from the harness config file);
    the defaults above are used otherwise.
    """

    max_summary_words: int = 100
    style_literal: str = DEFAULT_STYLE_LITERAL
    dimension_order: tuple[str, ...] = DIMENSIONS
    target_literal: str = TARGET_LITERAL
    length_template: str = LENGTH_TEMPLATE
    feedback_overrides: dict[str, str] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.max_summary_words < 1:
            raise ValueError("max_summary_words must be >= 1")
        if tuple(sorted(self.dimension_order)) != tuple(sorted(DIMENSIONS)):
            raise ValueError(
                "dimension_order must contain each of the seven dimensions exactly once"
            )
        for dim in self.feedback_overrides:
            if dim not in DIMENSION_SET:
                raise ValueError(f"feedback override for unknown dimension {dim!r}")


@dataclass(frozen=True)
class PromptBundle:
    """A composed generation prompt and its constituent fragments."""

    target_fragment: str
    length_fragment: str
    style_fragment: str
    feedback_fragments: tuple[str, ...]
    composed: str

    def __post_init__(self) -> None:
        parts = (
            self.target_fragment,
            self.length_fragment,
            self.style_fragment,
            *self.feedback_fragments,
        )
        if self.composed != " ".join(parts):
            raise ValueError("composed prompt does not match its fragments")


def _bundle(config: PromptConfig, feedback: tuple[str, ...]) -> PromptBundle:
    target = config.target_literal
    length = config.length_template.format(max_words=config.max_summary_words)
    style = config.style_literal
    return PromptBundle(
        target_fragment=target,
        length_fragment=length,
        style_fragment=style,
        feedback_fragments=feedback,
        composed=" ".join((target, length, style, *feedback)),
    )


def compose_generation_prompt(config: PromptConfig) -> PromptBundle:
    """Compose the base generation prompt (no feedback fragments)."""
    return _bundle(config, ())


def append_feedback(bundle: PromptBundle, fragments: list[str]) -> PromptBundle:
    """Return a new bundle with improvement fragments appended to the base prompt."""
    feedback = (*bundle.feedback_fragments, *fragments)
    return PromptBundle(
        target_fragment=bundle.target_fragment,
        length_fragment=bundle.length_fragment,
        style_fragment=bundle.style_fragment,
        feedback_fragments=feedback,
        composed=" ".join(
            (
                bundle.target_fragment,
                bundle.length_fragment,
                bundle.style_fragment,
                *feedback,
            )
        ),
    )


def feedback_fragment(dimension: str, config: PromptConfig | None = None) -> str:
    """The improvement instruction for a single failing dimension."""
    if dimension not in DIMENSION_SET:
        raise ValueError(f"unknown dimension {dimension!r}")
    if config is not None and dimension in config.feedback_overrides:
        return config.feedback_overrides[dimension]
    literal = FEEDBACK_LITERALS.get(dimension)
    if literal is not None:
        return literal
    return GENERIC_FEEDBACK_TEMPLATE.format(dimension=dimension.lower())


def compose_feedback_fragments(
    failing_dimensions, config: PromptConfig | None = None
) -> list[str]:
    """Improvement fragments for the failing dimensions, in dimension order."""
    unknown = set(failing_dimensions) - DIMENSION_SET
    if unknown:
        raise ValueError(f"unknown dimensions: {sorted(unknown)}")
    order = config.dimension_order if config is not None else DIMENSIONS
    return [
        feedback_fragment(d, config) for d in ordered(failing_dimensions, order)
    ]


JUDGE_PROMPT_TEMPLATE = (
    "You are a strict evaluator of text summaries. Score the candidate summary "
    "against the source text on seven dimensions: Consistency, Coherence, "
    "Relevance, Fluency, Readability, Naturalness, Factuality. Each score is a "
    "number from 1 to 10 (decimals allowed, 10 is best).\n"
    "Reply with a single JSON object whose keys are exactly the seven dimension "
    "names. You may additionally include \"per_sentence_fluency\" and "
    "\"per_sentence_naturalness\" arrays scoring each summary sentence on the "
    "same 1-10 scale. Do not wrap the object in code fences and do not emit any "
    "other JSON object.\n"
    "The source text and candidate summary follow as a JSON-escaped payload:\n"
    "{payload}"
)


def render_judge_prompt(source: str, candidate: str) -> str:
    """Render the evaluator prompt for one (source, candidate) pair.

    The pair is embedded as a JSON-escaped payload so that braces or quotes
    inside either text cannot be mistaken for the judge's score object by
    the report parser.
    """
    if not source:
        raise ValueError("source must be non-empty")
    if not candidate:
        raise ValueError("candidate must be non-empty")
    payload = json.dumps(
        {"source": source, "candidate": candidate}, ensure_ascii=False
    )
    return JUDGE_PROMPT_TEMPLATE.format(payload=payload)
