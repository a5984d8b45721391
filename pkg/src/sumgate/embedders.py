"""Token embedders for BERTScore.

Three interchangeable sources: a deterministic one-hot embedder (the
testing oracle -- cosine similarity reduces to token equality), an HTTP
embedding endpoint, and on-disk vectors. All return one unit-norm vector
per input token.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Protocol, Sequence

import numpy as np
import requests


class TokenEmbedder(Protocol):
    def embed(self, tokens: Sequence[str]) -> np.ndarray:
        """Map a token sequence to a (len(tokens), d) array of unit vectors."""
        ...


class OneHotEmbedder:
    """Maps each distinct token to its own basis vector.

    Indices are assigned on first sight and remembered for the embedder's
    lifetime, so the same token always lands on the same axis and cosine
    similarity is exactly the token-equality indicator. Vector width grows
    with the vocabulary seen; intended for tests and offline mock runs,
    not large corpora.
    """

    def __init__(self) -> None:
        self._index: dict[str, int] = {}

    def embed(self, tokens: Sequence[str]) -> np.ndarray:
        for token in tokens:
            if token not in self._index:
                self._index[token] = len(self._index)
        width = len(self._index)
        vectors = np.zeros((len(tokens), width))
        for row, token in enumerate(tokens):
            vectors[row, self._index[token]] = 1.0
        return vectors


class HttpEmbedder:
    """Fetches embeddings from an HTTP endpoint.

    Protocol: POST {"tokens": [...]} as JSON, receive {"vectors": [[...],
    ...]} with one vector per token. Vectors are L2-normalized locally.
    """

    def __init__(self, endpoint_url: str, timeout: float = 30.0) -> None:
        if not endpoint_url:
            raise ValueError("endpoint_url must be non-empty")
        self.endpoint_url = endpoint_url
        self.timeout = timeout

    def embed(self, tokens: Sequence[str]) -> np.ndarray:
        response = requests.post(
            self.endpoint_url, json={"tokens": list(tokens)}, timeout=self.timeout
        )
        response.raise_for_status()
        vectors = np.asarray(response.json()["vectors"], dtype=float)
        if vectors.ndim != 2 or vectors.shape[0] != len(tokens):
            raise ValueError("endpoint returned the wrong number of vectors")
        return _normalize_rows(vectors)


class FileEmbedder:
    """Loads a token -> vector mapping from a JSON file."""

    def __init__(self, path: str | Path) -> None:
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
        self._vectors = {
            token: _normalize_rows(np.asarray([vec], dtype=float))[0]
            for token, vec in raw.items()
        }

    def embed(self, tokens: Sequence[str]) -> np.ndarray:
        missing = [t for t in tokens if t not in self._vectors]
        if missing:
            raise ValueError(f"no stored vector for tokens: {missing[:5]}")
        return np.stack([self._vectors[t] for t in tokens])


def _normalize_rows(vectors: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(vectors, axis=1, keepdims=True)
    if np.any(norms == 0):
        raise ValueError("zero vector cannot be normalized")
    return vectors / norms
