"""Provider adapters: map each GE API's wire format onto AnswerRecords.

Each adapter style knows one citation annotation scheme.  ``annotated-json``
providers label citations with answer-sentence indices and expose the
visited-source list; ``answer-level`` providers return a flat source list
with no sentence labels.  New providers plug in by registering a style and
pointing a ProviderConfig at it.
"""

from __future__ import annotations

import datetime
import json
import os
from dataclasses import dataclass
from typing import Protocol

import requests

from .corpus import Question
from .ge_client import (
    AuthError,
    ParseError,
    ProviderError,
    RateLimitError,
    RawExchange,
    TransientError,
)


@dataclass(frozen=True)
class ProviderConfig:
    name: str
    style: str
    endpoint: str = ""
    model: str = ""
    credential_env: str = ""
    timeout: float = 60.0


class Adapter(Protocol):
    config: ProviderConfig

    def ask_raw(self, question: Question) -> RawExchange: ...

    def parse(
        self, raw: RawExchange
    ) -> tuple[str, list[tuple[str, tuple[int, ...]]], list[str] | None]: ...


def _utc_now() -> str:
    return (
        datetime.datetime.now(datetime.timezone.utc)
        .replace(microsecond=0)
        .isoformat()
        .replace("+00:00", "Z")
    )


def _require(obj: dict, field: str, context: str):
    if field not in obj:
        raise ParseError(f"{context}: missing field {field!r}")
    return obj[field]


class _HTTPAdapterBase:
    """Shared POST plumbing; subclasses define payloads and parsing."""

    def __init__(self, config: ProviderConfig, session: requests.Session | None = None):
        self.config = config
        self._session = session or requests.Session()

    def build_request(self, question: Question) -> dict:
        raise NotImplementedError

    def ask_raw(self, question: Question) -> RawExchange:
        request = self.build_request(question)
        headers = {"Content-Type": "application/json"}
        if self.config.credential_env:
            token = os.environ.get(self.config.credential_env, "")
            if not token:
                raise AuthError(
                    f"{self.config.name}: credential env {self.config.credential_env} unset"
                )
            headers["Authorization"] = f"Bearer {token}"
        try:
            resp = self._session.post(
                self.config.endpoint,
                json=request,
                headers=headers,
                timeout=self.config.timeout,
            )
        except requests.Timeout as exc:
            raise TransientError(f"{self.config.name}: timeout") from exc
        except requests.RequestException as exc:
            raise TransientError(f"{self.config.name}: {exc}") from exc
        if resp.status_code in (401, 403):
            raise AuthError(f"{self.config.name}: HTTP {resp.status_code}")
        if resp.status_code == 429:
            raise RateLimitError(f"{self.config.name}: rate limited")
        if resp.status_code >= 500:
            raise TransientError(f"{self.config.name}: HTTP {resp.status_code}")
        if resp.status_code != 200:
            raise ProviderError(f"{self.config.name}: HTTP {resp.status_code}")
        return RawExchange(
            provider=self.config.name,
            request=request,
            response_bytes=resp.content,
            timestamp=_utc_now(),
        )

    def _json(self, raw: RawExchange) -> dict:
        try:
            return json.loads(raw.response_bytes.decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            raise ParseError(f"{self.config.name}: response is not JSON") from exc


class AnnotatedJSONAdapter(_HTTPAdapterBase):
    """Providers that label citations with sentence indices and expose the
    visited-source list.

    Response schema::

        {"answer_text": str,
         "citations": [{"url": str, "sentence_indices": [int, ...]}, ...],
         "visited_sources": [str, ...]}        # optional
    """

    style = "annotated-json"

    def build_request(self, question: Question) -> dict:
        return {
            "model": self.config.model,
            "question": question.rendered_text,
            "web_search": True,
        }

    def parse(self, raw):
        doc = self._json(raw)
        context = self.config.name
        text = _require(doc, "answer_text", context)
        citations = []
        for i, item in enumerate(_require(doc, "citations", context)):
            url = _require(item, "url", f"{context}: citations[{i}]")
            indices = tuple(item.get("sentence_indices", ()))
            citations.append((url, indices))
        visited = doc.get("visited_sources")
        return text, citations, list(visited) if visited is not None else None


class AnswerLevelAdapter(_HTTPAdapterBase):
    """Providers that cite at answer level only.

    Response schema::

        {"output": {"text": str}, "sources": [str, ...]}
    """

    style = "answer-level"

    def build_request(self, question: Question) -> dict:
        return {
            "model": self.config.model,
            "input": question.rendered_text,
            "search": {"enabled": True},
        }

    def parse(self, raw):
        doc = self._json(raw)
        context = self.config.name
        output = _require(doc, "output", context)
        text = _require(output, "text", f"{context}: output")
        sources = _require(doc, "sources", context)
        return text, [(url, ()) for url in sources], None


ADAPTER_STYLES = {
    AnnotatedJSONAdapter.style: AnnotatedJSONAdapter,
    AnswerLevelAdapter.style: AnswerLevelAdapter,
}


def get_adapter(config: ProviderConfig, session: requests.Session | None = None) -> Adapter:
    cls = ADAPTER_STYLES.get(config.style)
    if cls is None:
        raise ValueError(
            f"unknown adapter style {config.style!r} "
            f"(known: {', '.join(sorted(ADAPTER_STYLES))})"
        )
    return cls(config, session=session)


def adapters_for(configs: list[ProviderConfig]) -> dict[str, Adapter]:
    return {cfg.name: get_adapter(cfg) for cfg in configs}
