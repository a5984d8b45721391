"""sumgate: adversarial generate/judge prompt refinement for summarization.

A generator backend drafts a summary under a fixed composed prompt, a
judge backend scores it on seven quality dimensions (1-10), a threshold
gate decides acceptance, and failing dimensions feed targeted improvement
fragments back into the next round's prompt. Ships with a self-contained
metric suite (ROUGE-1..5, ROUGE-L, BLEU, simplified METEOR, BERTScore)
and an experiment harness with a threshold-ablation sweep.
"""

from .backends import BackendSpec, CompletionRequest, ScriptedMock, complete, generate_summary
from .corpus import Document, load_corpus, split_sentences, tokenize
from .dimensions import DIMENSIONS
from .judge import (
    GateDecision,
    ScoreReport,
    aggregate_sentence_scores,
    gate,
    heuristic_consistency,
    parse_score_report,
    render_score_report,
)
from .loop import LoopConfig, LoopTrace, RoundRecord, run_batch, run_challenge
from .metrics import (
    MetricVector,
    PRF,
    bert_score,
    bleu,
    evaluate_pair,
    mean_vector,
    meteor_simplified,
    rouge_l,
    rouge_n,
)
from .embedders import FileEmbedder, HttpEmbedder, OneHotEmbedder
from .prompts import (
    PromptBundle,
    PromptConfig,
    compose_feedback_fragments,
    compose_generation_prompt,
    render_judge_prompt,
)

__version__ = "0.1.0"

__all__ = [
    "BackendSpec",
    "CompletionRequest",
    "DIMENSIONS",
    "Document",
    "FileEmbedder",
    "GateDecision",
    "HttpEmbedder",
    "LoopConfig",
    "LoopTrace",
    "MetricVector",
    "OneHotEmbedder",
    "PRF",
    "PromptBundle",
    "PromptConfig",
    "RoundRecord",
    "ScoreReport",
    "ScriptedMock",
    "aggregate_sentence_scores",
    "bert_score",
    "bleu",
    "complete",
    "compose_feedback_fragments",
    "compose_generation_prompt",
    "evaluate_pair",
    "gate",
    "generate_summary",
    "heuristic_consistency",
    "load_corpus",
    "mean_vector",
    "meteor_simplified",
    "parse_score_report",
    "render_judge_prompt",
    "render_score_report",
    "rouge_l",
    "rouge_n",
    "run_batch",
    "run_challenge",
    "split_sentences",
    "tokenize",
]
