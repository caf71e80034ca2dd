"""Sentence-embedding backends and the content-addressed vector cache.

The backend contract is deliberately small: an id, a dimension, and a batch
embed call.  Production runs use a local multilingual sentence-embedding
model; tests and the bundled demo corpus use the deterministic hash backend
so the whole pipeline runs offline.
"""

from __future__ import annotations

import hashlib
import re
from pathlib import Path
from typing import Protocol

import numpy as np


class EmbeddingBackend(Protocol):
    backend_id: str
    dim: int

    def embed_batch(self, texts: list[str]) -> np.ndarray: ...


_WORD_RE = re.compile(r"[a-z0-9]+")
_CJK_RE = re.compile(r"[぀-ヿ㐀-鿿豈-﫿]+")


def _tokenize(text: str) -> list[str]:
    """Word tokens for spaced scripts plus character bigrams for CJK runs."""
    text = text.lower()
    tokens = _WORD_RE.findall(text)
    for run in _CJK_RE.findall(text):
        if len(run) == 1:
            tokens.append(run)
        else:
            tokens.extend(run[i : i + 2] for i in range(len(run) - 1))
    return tokens


class HashEmbeddingBackend:
    """Deterministic pseudo-embeddings: normalized sums of token-hash vectors.

    Each token maps to a fixed gaussian vector seeded from its SHA-256
    digest, and a sentence embeds as the normalized sum over its tokens
    (random-indexing style).  Sentences sharing vocabulary therefore get
    smoothly graded cosine similarity, identical sentences get exactly 1.0,
    and results are reproducible across platforms and processes.
    """

    def __init__(self, dim: int = 384):
        self.dim = dim
        self.backend_id = f"hash-v1-d{dim}"
        self._token_vectors: dict[str, np.ndarray] = {}
        self.calls = 0  # batch calls served, for cache instrumentation

    def _token_vector(self, token: str) -> np.ndarray:
        vec = self._token_vectors.get(token)
        if vec is None:
            digest = hashlib.sha256(token.encode("utf-8")).digest()
            seed = int.from_bytes(digest[:8], "big")
            rng = np.random.Generator(np.random.PCG64(seed))
            vec = rng.standard_normal(self.dim)
            self._token_vectors[token] = vec
        return vec

    def embed_batch(self, texts: list[str]) -> np.ndarray:
        self.calls += 1
        out = np.zeros((len(texts), self.dim), dtype=np.float64)
        for i, text in enumerate(texts):
            tokens = _tokenize(text)
            if not tokens:
                tokens = [f"\x00empty:{text}"]
            for tok in tokens:
                out[i] += self._token_vector(tok)
        return out


class SentenceTransformerBackend:
    """Local multilingual sentence-embedding model (optional dependency)."""

    def __init__(self, model_name: str = "paraphrase-multilingual-MiniLM-L12-v2"):
        from sentence_transformers import SentenceTransformer  # lazy, heavy

        self._model = SentenceTransformer(model_name)
        self.dim = int(self._model.get_sentence_embedding_dimension())
        self.backend_id = f"sbert:{model_name}"
        self.calls = 0

    def embed_batch(self, texts: list[str]) -> np.ndarray:
        self.calls += 1
        return np.asarray(self._model.encode(texts, show_progress_bar=False))


def get_backend(name: str, **options) -> EmbeddingBackend:
    if name == "hash":
        return HashEmbeddingBackend(dim=int(options.get("dim", 384)))
    if name == "sbert":
        return SentenceTransformerBackend(
            model_name=options.get("model", "paraphrase-multilingual-MiniLM-L12-v2")
        )
    raise ValueError(f"unknown embedding backend {name!r}")


def _sentence_digest(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


class EmbeddingCache:
    """Content-addressed vector cache keyed by (backend id, sentence digest).

    Always caches in memory; when ``directory`` is given, vectors are also
    persisted as .npy files so later runs skip the backend entirely.
    """

    def __init__(self, directory: str | Path | None = None):
        self._memory: dict[tuple[str, str], np.ndarray] = {}
        self._dir = Path(directory) if directory else None

    def _path(self, backend_id: str, digest: str) -> Path:
        safe = re.sub(r"[^A-Za-z0-9._-]", "_", backend_id)
        return self._dir / safe / digest[:2] / f"{digest}.npy"

    def get(self, backend_id: str, text: str) -> np.ndarray | None:
        digest = _sentence_digest(text)
        vec = self._memory.get((backend_id, digest))
        if vec is not None:
            return vec
        if self._dir is not None:
            path = self._path(backend_id, digest)
            if path.exists():
                vec = np.load(path)
                self._memory[(backend_id, digest)] = vec
                return vec
        return None

    def put(self, backend_id: str, text: str, vector: np.ndarray) -> None:
        digest = _sentence_digest(text)
        self._memory[(backend_id, digest)] = vector
        if self._dir is not None:
            path = self._path(backend_id, digest)
            path.parent.mkdir(parents=True, exist_ok=True)
            np.save(path, vector)
