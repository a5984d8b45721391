"""Dataset ingestion, tokenization, and sentence segmentation.

The tokenizer here is the single word-splitting rule shared by the judge
heuristics, the metric suite, and the summary word-count constraint.
"""

from __future__ import annotations

import csv
import json
import logging
import random
import re
from dataclasses import dataclass, field
from pathlib import Path

logger = logging.getLogger(__name__)

DATASET_TAGS = ("cnn_dailymail", "billsum", "arxiv", "custom")

#: Default source/reference field names for the common distribution formats
#: of the three supported public datasets.
DATASET_FIELD_MAPS: dict[str, dict[str, str]] = {
    "cnn_dailymail": {"source": "article", "reference": "highlights"},
    "billsum": {"source": "text", "reference": "summary"},
    "arxiv": {"source": "article", "reference": "abstract"},
}

_TOKEN_RE = re.compile(r"[^\W_]+", re.UNICODE)
_TERMINATORS = ".!?"


class IngestionError(Exception):
    """Raised when a corpus file cannot be read or exceeds its error budget."""


@dataclass
class Document:
    """One source text plus optional reference summary and corpus metadata."""

    id: str
    source: str
    reference_summary: str | None = None
    dataset_tag: str = "custom"

    def __post_init__(self) -> None:
        if not self.source:
            raise ValueError("document source must be non-empty")
        if self.dataset_tag not in DATASET_TAGS:
            raise ValueError(f"unknown dataset tag {self.dataset_tag!r}")


def tokenize(text: str) -> list[str]:
    """Split text into casefolded word tokens.

    Unicode-aware: alphanumeric runs are tokens, everything else
    (punctuation, whitespace, underscores) is a boundary.
    """
    return _TOKEN_RE.findall(text.casefold())


def split_sentences(text: str) -> list[str]:
    """Split text into sentences after '.', '!' or '?'.

    A terminator ends a sentence when followed by whitespace and an
    uppercase letter, or by end-of-text. Abbreviations are not treated
    specially, so "Dr. Smith" splits after "Dr." -- a documented
    limitation of the rule.
    """
    sentences: list[str] = []
    start = 0
    i = 0
    n = len(text)
    while i < n:
        if text[i] in _TERMINATORS:
            j = i + 1
            k = j
            while k < n and text[k].isspace():
                k += 1
            if k > j and (k >= n or text[k].isupper()):
                sentences.append(text[start:j])
                start = k
                i = k
                continue
        i += 1
    tail = text[start:]
    if tail.strip():
        sentences.append(tail)
    return [s.strip() for s in sentences if s.strip()]


@dataclass
class _Loaded:
    documents: list[Document] = field(default_factory=list)
    skipped_empty: int = 0
    record_errors: int = 0


def load_corpus(
    path: str | Path,
    format: str,
    field_map: dict[str, str],
    dataset_tag: str = "custom",
    max_errors: int = 0,
) -> list[Document]:
    """Load documents from a JSONL or CSV file.

    ``field_map`` names the record fields holding the source text
    (required key "source") and optionally the reference summary
    ("reference") and document id ("id"). Records with an empty source are
    skipped with a warning; unparsable records count against
    ``max_errors`` and abort the load once the budget is exceeded.
    Missing id fields are synthesized from 1-based record numbers.
    """
    path = Path(path)
    if "source" not in field_map:
        raise IngestionError("field_map must name a 'source' field")
    if format not in ("jsonl", "csv"):
        raise IngestionError(f"unsupported corpus format {format!r}")
    try:
        raw = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise IngestionError(f"cannot read corpus file {path}: {exc}") from exc

    loaded = _Loaded()
    if format == "jsonl":
        _load_jsonl(raw, field_map, dataset_tag, max_errors, loaded)
    else:
        _load_csv(raw, field_map, dataset_tag, max_errors, loaded)

    if loaded.skipped_empty:
        logger.warning(
            "skipped %d record(s) with empty source in %s", loaded.skipped_empty, path
        )
    seen: set[str] = set()
    for doc in loaded.documents:
        if doc.id in seen:
            raise IngestionError(f"duplicate document id {doc.id!r} in {path}")
        seen.add(doc.id)
    return loaded.documents


def _record_to_document(
    record: dict, field_map: dict[str, str], dataset_tag: str, record_no: int
) -> Document | None:
    source = record.get(field_map["source"])
    if not isinstance(source, str) or not source.strip():
        return None
    reference = None
    ref_field = field_map.get("reference")
    if ref_field:
        value = record.get(ref_field)
        if isinstance(value, str) and value.strip():
            reference = value
    id_field = field_map.get("id")
    doc_id = record.get(id_field) if id_field else None
    if doc_id is None or str(doc_id) == "":
        doc_id = str(record_no)
    return Document(
        id=str(doc_id),
        source=source,
        reference_summary=reference,
        dataset_tag=dataset_tag,
    )


def _load_jsonl(raw, field_map, dataset_tag, max_errors, loaded: _Loaded) -> None:
    for line_no, line in enumerate(raw.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            record = json.loads(line)
            if not isinstance(record, dict):
                raise ValueError("record is not a JSON object")
        except ValueError as exc:
            _count_error(loaded, max_errors, line_no, exc)
            continue
        doc = _record_to_document(record, field_map, dataset_tag, line_no)
        if doc is None:
            loaded.skipped_empty += 1
        else:
            loaded.documents.append(doc)


def _load_csv(raw, field_map, dataset_tag, max_errors, loaded: _Loaded) -> None:
    reader = csv.DictReader(raw.splitlines())
    if reader.fieldnames is None:
        raise IngestionError("CSV corpus file has no header row")
    if field_map["source"] not in reader.fieldnames:
        raise IngestionError(
            f"CSV header lacks the source column {field_map['source']!r}"
        )
    for row_no, record in enumerate(reader, start=1):
        if None in record:  # more cells than header columns
            _count_error(
                loaded, max_errors, row_no, ValueError("row has extra unnamed columns")
            )
            continue
        doc = _record_to_document(record, field_map, dataset_tag, row_no)
        if doc is None:
            loaded.skipped_empty += 1
        else:
            loaded.documents.append(doc)


def _count_error(loaded: _Loaded, max_errors: int, record_no: int, exc) -> None:
    loaded.record_errors += 1
    if loaded.record_errors > max_errors:
        raise IngestionError(f"unparsable record at line {record_no}: {exc}") from exc
    logger.warning("skipping unparsable record at line %d: %s", record_no, exc)


def subsample(docs: list[Document], cap: int | None, seed: int) -> list[Document]:
    """Take a reproducible subsample of ``cap`` documents, preserving order."""
    if cap is None or cap >= len(docs):
        return list(docs)
    if cap < 0:
        raise ValueError("sample cap must be non-negative")
    rng = random.Random(seed)
    keep = sorted(rng.sample(range(len(docs)), cap))
    return [docs[i] for i in keep]
