"""From-scratch implementations of the nine summary-evaluation metrics.

ROUGE-1..5 and ROUGE-L (token n-gram / longest-common-subsequence
overlap), BLEU with brevity penalty, a simplified METEOR (exact + Porter
stem unigram alignment with a fragmentation penalty), and BERTScore
greedy matching over a pluggable token embedder. All metrics share the
corpus tokenizer, so every score is invariant under casefolding.
"""

from __future__ import annotations

import logging
import math
from collections import Counter
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from . import stemmer
from .corpus import tokenize

logger = logging.getLogger(__name__)

BLEU_EPSILON = 1e-9
BLEU_MAX_ORDER = 4
METEOR_ALPHA = 0.9  # recall weight in the harmonic mean
METEOR_PENALTY_WEIGHT = 0.5
METEOR_PENALTY_EXPONENT = 3

#: Column order used by every report table.
METRIC_COLUMNS = (
    "Rouge1",
    "Rouge2",
    "Rouge3",
    "Rouge4",
    "Rouge5",
    "RougeL",
    "Bleu",
    "Meteor",
    "Bertscore",
)


class UndefinedMetricError(ValueError):
    """A metric has no value for the given inputs (e.g. no tokens to embed)."""


class PRF(NamedTuple):
    precision: float
    recall: float
    f1: float


_ZERO_PRF = PRF(0.0, 0.0, 0.0)


def _f1(precision: float, recall: float) -> float:
    if precision + recall == 0:
        return 0.0
    return 2 * precision * recall / (precision + recall)


def _ngrams(tokens: Sequence[str], n: int) -> list[tuple[str, ...]]:
    return [tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1)]


def rouge_n(candidate: str, reference: str, n: int) -> PRF:
    """ROUGE-n: clipped n-gram multiset overlap.

    precision = overlap / candidate n-grams, recall = overlap / reference
    n-grams, F1 their harmonic mean. Either side without n-grams scores 0.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    cand = _ngrams(tokenize(candidate), n)
    ref = _ngrams(tokenize(reference), n)
    if not cand or not ref:
        return _ZERO_PRF
    overlap = sum((Counter(cand) & Counter(ref)).values())
    precision = overlap / len(cand)
    recall = overlap / len(ref)
    return PRF(precision, recall, _f1(precision, recall))


def _lcs_length(a: Sequence[str], b: Sequence[str]) -> int:
    # single-row DP
    if len(b) > len(a):
        a, b = b, a
    row = [0] * (len(b) + 1)
    for x in a:
        prev_diag = 0
        for j, y in enumerate(b, start=1):
            prev_row = row[j]
            if x == y:
                row[j] = prev_diag + 1
            elif row[j - 1] > row[j]:
                row[j] = row[j - 1]
            prev_diag = prev_row
    return row[len(b)]


def rouge_l(candidate: str, reference: str) -> PRF:
    """ROUGE-L: longest common subsequence over token sequences."""
    cand = tokenize(candidate)
    ref = tokenize(reference)
    if not cand or not ref:
        return _ZERO_PRF
    lcs = _lcs_length(cand, ref)
    precision = lcs / len(cand)
    recall = lcs / len(ref)
    return PRF(precision, recall, _f1(precision, recall))


def clipped_ngram_counts(
    candidate_tokens: Sequence[str],
    reference_token_lists: Sequence[Sequence[str]],
    n: int,
) -> tuple[int, int]:
    """(clipped matches, total candidate n-grams) for one BLEU order."""
    cand = _ngrams(candidate_tokens, n)
    if not cand:
        return 0, 0
    cand_counts = Counter(cand)
    max_ref: Counter = Counter()
    for ref_tokens in reference_token_lists:
        for gram, count in Counter(_ngrams(ref_tokens, n)).items():
            if count > max_ref[gram]:
                max_ref[gram] = count
    clipped = sum(min(count, max_ref[gram]) for gram, count in cand_counts.items())
    return clipped, len(cand)


def bleu(candidate: str, references: Sequence[str]) -> float:
    """BLEU over n = 1..4 with epsilon smoothing and a brevity penalty.

    Zero clipped counts are replaced by 1e-9 before the geometric mean so
    short texts do not zero the whole score. Candidates shorter than four
    tokens use orders up to their own length. The brevity penalty uses the
    reference length closest to the candidate's (ties go to the shorter).
    """
    if not references:
        raise ValueError("at least one reference is required")
    cand = tokenize(candidate)
    if not cand:
        return 0.0
    refs = [tokenize(r) for r in references]

    max_order = min(BLEU_MAX_ORDER, len(cand))
    log_precision_sum = 0.0
    for n in range(1, max_order + 1):
        clipped, total = clipped_ngram_counts(cand, refs, n)
        effective = clipped if clipped > 0 else BLEU_EPSILON
        log_precision_sum += math.log(effective / total)
    geometric_mean = math.exp(log_precision_sum / max_order)

    c = len(cand)
    r = min((len(ref) for ref in refs), key=lambda length: (abs(length - c), length))
    brevity_penalty = min(1.0, math.exp(1 - r / c))
    return brevity_penalty * geometric_mean


def _align_stage(
    cand: Sequence[str],
    ref: Sequence[str],
    cand_free: list[bool],
    ref_free: list[bool],
    key,
    alignment: dict[int, int],
) -> None:
    """Greedily align free candidate positions to free reference positions.

    Positions match when ``key`` agrees. Prefers the reference position
    that continues the previous pair's chunk, then the earliest free one.
    """
    ref_positions: dict[str, list[int]] = {}
    for j, token in enumerate(ref):
        if ref_free[j]:
            ref_positions.setdefault(key(token), []).append(j)
    for i, token in enumerate(cand):
        if not cand_free[i]:
            continue
        candidates = [j for j in ref_positions.get(key(token), []) if ref_free[j]]
        if not candidates:
            continue
        prev = alignment.get(i - 1)
        if prev is not None and prev + 1 < len(ref) and (prev + 1) in candidates:
            choice = prev + 1
        else:
            choice = candidates[0]
        alignment[i] = choice
        cand_free[i] = False
        ref_free[choice] = False


def _count_chunks(alignment: dict[int, int]) -> int:
    pairs = sorted(alignment.items())
    chunks = 0
    prev = None
    for ci, ri in pairs:
        if prev is None or ci != prev[0] + 1 or ri != prev[1] + 1:
            chunks += 1
        prev = (ci, ri)
    return chunks


def meteor_simplified(candidate: str, reference: str) -> float:
    """Simplified METEOR: exact then Porter-stem unigram alignment.

    With m matches over candidate length |c| and reference length |r|:
    P = m/|c|, R = m/|r|, F_mean = PR / (0.9 P + 0.1 R), and the score is
    F_mean * (1 - 0.5 (chunks/m)^3). Alignment is greedy (each stage
    prefers continuing the current chunk, then the earliest unused
    reference position); exhaustive chunk minimization is intractable for
    texts with many repeated tokens.
    """
    cand = tokenize(candidate)
    ref = tokenize(reference)
    if not cand or not ref:
        return 0.0

    cand_free = [True] * len(cand)
    ref_free = [True] * len(ref)
    alignment: dict[int, int] = {}
    _align_stage(cand, ref, cand_free, ref_free, lambda t: t, alignment)
    _align_stage(cand, ref, cand_free, ref_free, stemmer.stem, alignment)

    m = len(alignment)
    if m == 0:
        return 0.0
    precision = m / len(cand)
    recall = m / len(ref)
    f_mean = (precision * recall) / (
        METEOR_ALPHA * precision + (1 - METEOR_ALPHA) * recall
    )
    chunks = _count_chunks(alignment)
    penalty = METEOR_PENALTY_WEIGHT * (chunks / m) ** METEOR_PENALTY_EXPONENT
    return f_mean * (1 - penalty)


def bert_score(candidate: str, reference: str, embedder) -> PRF:
    """BERTScore greedy matching over cosine similarity.

    precision = mean over candidate tokens of their best similarity to any
    reference token; recall symmetrically; F1 the harmonic mean. No idf
    weighting and no baseline rescaling.
    """
    cand = tokenize(candidate)
    ref = tokenize(reference)
    if not cand or not ref:
        raise UndefinedMetricError("both texts must tokenize to at least one token")
    cand_vecs = np.asarray(embedder.embed(cand), dtype=float)
    ref_vecs = np.asarray(embedder.embed(ref), dtype=float)
    if cand_vecs.shape[0] != len(cand) or ref_vecs.shape[0] != len(ref):
        raise ValueError("embedder returned the wrong number of vectors")
    width = max(cand_vecs.shape[1], ref_vecs.shape[1])
    cand_vecs = _pad_width(cand_vecs, width)
    ref_vecs = _pad_width(ref_vecs, width)
    similarity = cand_vecs @ ref_vecs.T
    precision = float(similarity.max(axis=1).mean())
    recall = float(similarity.max(axis=0).mean())
    return PRF(precision, recall, _f1(precision, recall))


def _pad_width(matrix: np.ndarray, width: int) -> np.ndarray:
    # vocabularies grown at different times may differ in dimension;
    # zero-padding leaves dot products unchanged
    if matrix.shape[1] == width:
        return matrix
    return np.pad(matrix, ((0, 0), (0, width - matrix.shape[1])))


@dataclass(frozen=True)
class MetricVector:
    """The nine evaluation metrics for one candidate/reference pair."""

    rouge1: float
    rouge2: float
    rouge3: float
    rouge4: float
    rouge5: float
    rouge_l: float
    bleu: float
    meteor: float
    bertscore: float

    def as_tuple(self) -> tuple[float, ...]:
        return (
            self.rouge1,
            self.rouge2,
            self.rouge3,
            self.rouge4,
            self.rouge5,
            self.rouge_l,
            self.bleu,
            self.meteor,
            self.bertscore,
        )

    @property
    def rouge_n_f1(self) -> dict[int, float]:
        return dict(enumerate(self.as_tuple()[:5], start=1))


def evaluate_pair(candidate: str, reference: str, embedder) -> MetricVector:
    """All nine metrics for one pair; degenerate BERTScore inputs score 0."""
    rouge_f1 = [rouge_n(candidate, reference, n).f1 for n in range(1, 6)]
    try:
        bert_f1 = bert_score(candidate, reference, embedder).f1
    except UndefinedMetricError as exc:
        logger.warning("bertscore undefined, recording 0: %s", exc)
        bert_f1 = 0.0
    return MetricVector(
        rouge1=rouge_f1[0],
        rouge2=rouge_f1[1],
        rouge3=rouge_f1[2],
        rouge4=rouge_f1[3],
        rouge5=rouge_f1[4],
        rouge_l=rouge_l(candidate, reference).f1,
        bleu=bleu(candidate, [reference]),
        meteor=meteor_simplified(candidate, reference),
        bertscore=bert_f1,
    )


def mean_vector(vectors: Sequence[MetricVector]) -> MetricVector:
    """Arithmetic mean of per-pair metric vectors (corpus aggregation)."""
    if not vectors:
        raise ValueError("cannot average zero metric vectors")
    count = len(vectors)
    sums = [0.0] * 9
    for vector in vectors:
        for i, value in enumerate(vector.as_tuple()):
            sums[i] += value
    means = [s / count for s in sums]
    return MetricVector(*means)
