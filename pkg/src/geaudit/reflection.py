"""Sentence segmentation, similarity bands, and the sim_max reflection score.

A citation's reflection score is the maximum cosine similarity between any
answer sentence and any sentence of the cited page, computed under a single
embedding backend.  Scores fall into three disjoint bands:

    low  : sim_max <= 0.8
    mid  : 0.8 < sim_max <= 0.9
    high : 0.9 < sim_max <= 1.0
"""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass

import numpy as np

from .embeddings import EmbeddingBackend, EmbeddingCache

LOW_MAX = 0.8
MID_MAX = 0.9


class SimilarityBand(enum.Enum):
    LOW = "low"
    MID = "mid"
    HIGH = "high"


def band(score: float) -> SimilarityBand:
    """Map a similarity score in [-1, 1] to its band; boundaries go down."""
    if not -1.0 <= score <= 1.0:
        raise ValueError(f"similarity score out of range: {score}")
    if score <= LOW_MAX:
        return SimilarityBand.LOW
    if score <= MID_MAX:
        return SimilarityBand.MID
    return SimilarityBand.HIGH


# Trailing tokens (lowercased, dots stripped on the right) that do not end an
# English sentence.  The list is part of the published segmentation rule.
EN_ABBREVIATIONS = frozenset(
    {
        "dr", "mr", "mrs", "ms", "prof", "rev", "gen", "sen", "rep", "gov",
        "jr", "sr", "st", "vs", "etc", "e.g", "i.e", "cf", "al", "inc",
        "ltd", "co", "corp", "dept", "est", "fig", "no", "approx",
        "u.s", "u.k", "u.n", "d.c",
    }
)

_OPENERS = "\"'“‘([「『"

# English: terminator run plus any closing quotes/brackets, then whitespace.
_EN_BOUNDARY = re.compile(r"([.!?]+[\"'”’)\]]*)(\s+)")
# Japanese: fullwidth terminators (plus ASCII !?) and closing quotes; no
# whitespace or capitalization requirement after the boundary.
_JA_BOUNDARY = re.compile(r"([。！？．!?]+[」』）〉》”’)\"']*)")

_TRAILING_WORD = re.compile(r"[A-Za-z](?:[A-Za-z.]*[A-Za-z])?\.?$")


@dataclass(frozen=True)
class Sentence:
    index: int
    text: str
    language: str


def _is_abbreviation(prefix: str) -> bool:
    """True when the word ending ``prefix`` is on the exception list."""
    m = _TRAILING_WORD.search(prefix)
    if m is None:
        return False
    return m.group(0).lower().rstrip(".") in EN_ABBREVIATIONS


def _split_line_en(line: str) -> list[str]:
    parts: list[str] = []
    pos = 0
    for m in _EN_BOUNDARY.finditer(line):
        nxt = line[m.end()] if m.end() < len(line) else ""
        if not (nxt.isupper() or nxt in _OPENERS):
            continue
        if m.group(1).startswith(".") and _is_abbreviation(line[: m.start() + 1]):
            continue
        parts.append(line[pos : m.end(1)])
        pos = m.end()
    parts.append(line[pos:])
    return parts


def _split_line_ja(line: str) -> list[str]:
    parts: list[str] = []
    pos = 0
    for m in _JA_BOUNDARY.finditer(line):
        parts.append(line[pos : m.end()])
        pos = m.end()
    parts.append(line[pos:])
    return parts


_CJK_CHAR = re.compile(r"[぀-ヿ㐀-鿿豈-﫿]")


def detect_language(text: str, default: str = "en") -> str:
    """Coarse ja/en call for fetched pages, used only to pick a splitter.

    A page whose non-whitespace text is at least 5% CJK splits as Japanese;
    everything else (including empty text) splits as English.
    """
    squeezed = "".join(text.split())
    if not squeezed:
        return default
    cjk = len(_CJK_CHAR.findall(squeezed))
    return "ja" if cjk * 20 >= len(squeezed) else "en"


def split_sentences(text: str, language: str) -> list[Sentence]:
    """Segment ``text`` into sentences; newlines are always hard boundaries."""
    split_line = _split_line_ja if language == "ja" else _split_line_en
    sentences: list[Sentence] = []
    for line in text.split("\n"):
        for raw in split_line(line):
            stripped = raw.strip()
            if stripped:
                sentences.append(Sentence(len(sentences), stripped, language))
    return sentences


def embed_sentences(
    sentences: list[Sentence],
    backend: EmbeddingBackend,
    cache: EmbeddingCache | None = None,
) -> np.ndarray:
    """Unit-normalized embedding matrix, one row per sentence."""
    out = np.zeros((len(sentences), backend.dim), dtype=np.float64)
    missing: list[int] = []
    for i, sent in enumerate(sentences):
        cached = cache.get(backend.backend_id, sent.text) if cache else None
        if cached is not None:
            out[i] = cached
        else:
            missing.append(i)
    if missing:
        raw = np.asarray(
            backend.embed_batch([sentences[i].text for i in missing]), dtype=np.float64
        )
        norms = np.linalg.norm(raw, axis=1, keepdims=True)
        norms[norms == 0.0] = 1.0
        raw = raw / norms
        for row, i in enumerate(missing):
            out[i] = raw[row]
            if cache is not None:
                cache.put(backend.backend_id, sentences[i].text, raw[row])
    return out


def cosine(u: np.ndarray, v: np.ndarray) -> float:
    """Cosine similarity of two vectors, clipped into [-1, 1]."""
    nu = np.linalg.norm(u)
    nv = np.linalg.norm(v)
    if nu == 0.0 or nv == 0.0:
        raise ValueError("cosine undefined for zero vector")
    return float(np.clip(np.dot(u, v) / (nu * nv), -1.0, 1.0))


def similarity_matrix(answer_vecs: np.ndarray, citation_vecs: np.ndarray) -> np.ndarray:
    """Pairwise cosine matrix for unit-normalized rows, clipped into [-1, 1]."""
    return np.clip(answer_vecs @ citation_vecs.T, -1.0, 1.0)


def sim_max(answer_vecs: np.ndarray, citation_vecs: np.ndarray) -> tuple[float, tuple[int, int]]:
    """Best (score, (answer_idx, citation_idx)) pair over all sentence pairs.

    Ties break to the smallest (answer index, citation index) pair; both
    input matrices must be non-empty and unit-normalized.
    """
    if answer_vecs.shape[0] == 0 or citation_vecs.shape[0] == 0:
        raise ValueError("sim_max requires at least one sentence on each side")
    matrix = similarity_matrix(answer_vecs, citation_vecs)
    flat = int(np.argmax(matrix))  # first occurrence == lexicographic min pair
    ai, ci = divmod(flat, matrix.shape[1])
    return float(matrix[ai, ci]), (ai, ci)


@dataclass(frozen=True)
class CitationReflection:
    """Reflection score for one (answer, cited page) pair."""

    url: str
    score: float
    band: SimilarityBand
    answer_index: int
    citation_index: int
    answer_language: str
    citation_language: str

    @property
    def cross_language(self) -> bool:
        return self.answer_language != self.citation_language

    def to_dict(self) -> dict:
        return {
            "url": self.url,
            "sim_max": self.score,
            "band": self.band.value,
            "answer_index": self.answer_index,
            "citation_index": self.citation_index,
            "answer_language": self.answer_language,
            "citation_language": self.citation_language,
            "cross_language": self.cross_language,
        }


def reflect_citation(
    url: str,
    answer_sentences: list[Sentence],
    citation_sentences: list[Sentence],
    backend: EmbeddingBackend,
    cache: EmbeddingCache | None = None,
) -> CitationReflection | None:
    """Score one citation; None when either side has no sentences (excluded)."""
    if not answer_sentences or not citation_sentences:
        return None
    a_vecs = embed_sentences(answer_sentences, backend, cache)
    c_vecs = embed_sentences(citation_sentences, backend, cache)
    score, (ai, ci) = sim_max(a_vecs, c_vecs)
    return CitationReflection(
        url=url,
        score=score,
        band=band(score),
        answer_index=ai,
        citation_index=ci,
        answer_language=answer_sentences[0].language,
        citation_language=citation_sentences[0].language,
    )
