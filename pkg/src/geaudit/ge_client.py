"""Provider-neutral GE client: answer records, raw capture, record/replay.

The collection invariant is raw-before-parse: every answer's verbatim wire
response is persisted to the fixture file before any parsing happens, so a
record can always be re-derived (or a parser bug diagnosed) from what the
provider actually sent.  Replaying a fixture re-parses those raw exchanges
and is deterministic and network-free.
"""

from __future__ import annotations

import base64
import json
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import TYPE_CHECKING
from urllib.parse import urlsplit, urlunsplit

from .domains import DomainError, normalize_domain

if TYPE_CHECKING:  # pragma: no cover
    from .adapters import Adapter
    from .corpus import Question

FIXTURE_FORMAT = "geaudit-fixture"
FIXTURE_VERSION = 1


class GEClientError(Exception):
    pass


class ParseError(GEClientError):
    """A provider response that does not match the adapter's schema."""


class FixtureError(GEClientError):
    """A fixture file that cannot be replayed (version, truncation, JSON)."""


class ProviderError(GEClientError):
    """Remote-side failure for one request."""

    kind = "provider_error"


class AuthError(ProviderError):
    kind = "auth"


class RateLimitError(ProviderError):
    kind = "rate_limit"


class TransientError(ProviderError):
    kind = "transient"


@dataclass(frozen=True)
class CitationRef:
    """One citation occurrence: full URL plus its domain reduction.

    ``sentence_indices`` lists the answer sentences the provider labeled
    with this citation; empty when the provider cites at answer level.
    """

    url: str
    host: str
    registrable_domain: str
    sentence_indices: tuple[int, ...] = ()

    def __post_init__(self):
        if any(i < 0 for i in self.sentence_indices):
            raise GEClientError(f"negative sentence index in citation {self.url}")

    def to_dict(self) -> dict:
        return {
            "url": self.url,
            "host": self.host,
            "registrable_domain": self.registrable_domain,
            "sentence_indices": list(self.sentence_indices),
        }

    @classmethod
    def from_url(cls, url: str, sentence_indices=()) -> CitationRef:
        parts = normalize_domain(url)
        return cls(
            url=url,
            host=parts.host,
            registrable_domain=parts.registrable,
            sentence_indices=tuple(sentence_indices),
        )


def normalize_url(url: str) -> str:
    """URL identity used for containment checks and pool construction."""
    parts = urlsplit(url.strip())
    path = parts.path.rstrip("/") or ""
    return urlunsplit(
        (parts.scheme.lower(), (parts.netloc or "").lower(), path, parts.query, "")
    )


@dataclass(frozen=True)
class AnswerRecord:
    question_id: str
    provider: str
    repeat_index: int
    answer_text: str
    citations: tuple[CitationRef, ...]
    visited_sources: tuple[str, ...] | None
    collected_at: str

    def __post_init__(self):
        if self.repeat_index < 0:
            raise GEClientError(f"negative repeat_index for {self.question_id}")
        if self.visited_sources is not None:
            visited = {normalize_url(u) for u in self.visited_sources}
            for c in self.citations:
                if normalize_url(c.url) not in visited:
                    raise ParseError(
                        f"citation {c.url} not in visited_sources for "
                        f"{self.question_id}#{self.repeat_index}"
                    )

    def to_dict(self) -> dict:
        return {
            "question_id": self.question_id,
            "provider": self.provider,
            "repeat_index": self.repeat_index,
            "answer_text": self.answer_text,
            "citations": [c.to_dict() for c in self.citations],
            "visited_sources": (
                list(self.visited_sources) if self.visited_sources is not None else None
            ),
            "collected_at": self.collected_at,
        }

    @classmethod
    def from_dict(cls, d: dict) -> AnswerRecord:
        return cls(
            question_id=d["question_id"],
            provider=d["provider"],
            repeat_index=d["repeat_index"],
            answer_text=d["answer_text"],
            citations=tuple(
                CitationRef(
                    url=c["url"],
                    host=c["host"],
                    registrable_domain=c["registrable_domain"],
                    sentence_indices=tuple(c["sentence_indices"]),
                )
                for c in d["citations"]
            ),
            visited_sources=(
                tuple(d["visited_sources"]) if d.get("visited_sources") is not None else None
            ),
            collected_at=d["collected_at"],
        )


@dataclass(frozen=True)
class RawExchange:
    provider: str
    request: dict
    response_bytes: bytes
    timestamp: str


def build_answer_record(
    adapter: Adapter, question_id: str, repeat_index: int, raw: RawExchange
) -> AnswerRecord:
    """Parse one raw exchange into an AnswerRecord via its adapter."""
    answer_text, citation_pairs, visited = adapter.parse(raw)
    citations = []
    for url, indices in citation_pairs:
        try:
            citations.append(CitationRef.from_url(url, indices))
        except DomainError as exc:
            raise ParseError(f"citation url invalid: {url!r} ({exc})") from exc
    return AnswerRecord(
        question_id=question_id,
        provider=raw.provider,
        repeat_index=repeat_index,
        answer_text=answer_text,
        citations=tuple(citations),
        visited_sources=tuple(visited) if visited is not None else None,
        collected_at=raw.timestamp,
    )


class Recorder:
    """Append-only fixture writer: one versioned header, one raw per line."""

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self.path.parent.mkdir(parents=True, exist_ok=True)
        new = not self.path.exists() or self.path.stat().st_size == 0
        self._fh = open(self.path, "a", encoding="utf-8")
        if new:
            self._write(
                {"kind": "header", "format": FIXTURE_FORMAT, "version": FIXTURE_VERSION}
            )

    def _write(self, obj: dict) -> None:
        self._fh.write(json.dumps(obj, ensure_ascii=False, sort_keys=True) + "\n")
        self._fh.flush()

    def record_raw(self, question_id: str, repeat_index: int, raw: RawExchange) -> None:
        self._write(
            {
                "kind": "raw",
                "question_id": question_id,
                "repeat_index": repeat_index,
                "provider": raw.provider,
                "request": raw.request,
                "response_b64": base64.b64encode(raw.response_bytes).decode("ascii"),
                "timestamp": raw.timestamp,
            }
        )

    def close(self) -> None:
        self._fh.close()

    def __enter__(self) -> Recorder:
        return self

    def __exit__(self, *exc) -> None:
        self.close()


def replay(
    path: str | Path, adapters: dict[str, Adapter]
) -> tuple[list[AnswerRecord], list[str]]:
    """Re-parse a fixture into AnswerRecords, offline and deterministic.

    Returns (records, skipped) where ``skipped`` describes raw lines whose
    responses fail their adapter's schema — the same lines collection would
    have skipped.  Structural fixture problems raise :class:`FixtureError`
    naming the offending line number.
    """
    path = Path(path)
    records: list[AnswerRecord] = []
    skipped: list[str] = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if line == "\n":
                continue
            if not line.endswith("\n"):
                raise FixtureError(f"{path}:{lineno}: truncated line")
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise FixtureError(f"{path}:{lineno}: bad JSON ({exc.msg})") from exc
            if lineno == 1:
                if obj.get("kind") != "header" or obj.get("format") != FIXTURE_FORMAT:
                    raise FixtureError(f"{path}:1: not a fixture file")
                if obj.get("version") != FIXTURE_VERSION:
                    raise FixtureError(
                        f"{path}:1: fixture version {obj.get('version')} "
                        f"unsupported (expected {FIXTURE_VERSION})"
                    )
                continue
            if obj.get("kind") != "raw":
                raise FixtureError(f"{path}:{lineno}: unknown record kind {obj.get('kind')!r}")
            provider = obj.get("provider")
            adapter = adapters.get(provider)
            if adapter is None:
                raise FixtureError(f"{path}:{lineno}: no adapter for provider {provider!r}")
            raw = RawExchange(
                provider=provider,
                request=obj.get("request", {}),
                response_bytes=base64.b64decode(obj["response_b64"]),
                timestamp=obj["timestamp"],
            )
            try:
                records.append(
                    build_answer_record(adapter, obj["question_id"], obj["repeat_index"], raw)
                )
            except ParseError as exc:
                skipped.append(f"{path}:{lineno}: {exc}")
    return records, skipped


@dataclass(frozen=True)
class RepeatError:
    repeat_index: int
    kind: str
    message: str


@dataclass
class AskResult:
    records: list[AnswerRecord] = field(default_factory=list)
    errors: list[RepeatError] = field(default_factory=list)


def ask(
    adapter: Adapter,
    question: Question,
    repeat_count: int,
    recorder: Recorder,
    *,
    max_retries: int = 3,
    backoff_base: float = 1.0,
    sleep=time.sleep,
    rng=None,
) -> AskResult:
    """Ask one question ``repeat_count`` times, persisting raws before parsing.

    Rate limits and transient failures retry with jittered exponential
    backoff; auth failures abort immediately (every later repeat would fail
    the same way).  Other per-repeat failures are annotated and skipped.
    """
    import random

    rng = rng or random.Random()
    result = AskResult()
    for repeat_index in range(repeat_count):
        raw = None
        for attempt in range(max_retries + 1):
            try:
                raw = adapter.ask_raw(question)
                break
            except AuthError:
                raise
            except (RateLimitError, TransientError) as exc:
                if attempt == max_retries:
                    result.errors.append(RepeatError(repeat_index, exc.kind, str(exc)))
                    break
                sleep(backoff_base * (2**attempt) + rng.uniform(0, backoff_base))
            except ProviderError as exc:
                result.errors.append(RepeatError(repeat_index, exc.kind, str(exc)))
                break
        if raw is None:
            continue
        recorder.record_raw(question.id, repeat_index, raw)  # raw-before-parse
        try:
            result.records.append(
                build_answer_record(adapter, question.id, repeat_index, raw)
            )
        except ParseError as exc:
            result.errors.append(RepeatError(repeat_index, "parse", str(exc)))
    return result
