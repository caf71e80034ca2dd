"""LLM-judge backends for publisher classification.

A judge receives exactly the citation URL and the domain's raw WHOIS text
(never page content) and must answer with one bare category label.  Two
backends exist besides the real HTTP one: a static host->label table for
offline runs and a scripted judge for tests.  Non-label replies are retried
once, then recorded as a judge failure (``classify_with_judge`` returns
None).
"""

from __future__ import annotations

import importlib.resources
import json
import os
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Protocol

import requests

from .whois import WhoisRecord


class JudgeError(Exception):
    pass


# Stable serialized tokens for the seven publisher categories.
CATEGORY_TOKENS = (
    "party",
    "media",
    "platform",
    "owned",
    "academia",
    "non_media_industry",
    "government",
)

_LABEL_ALIASES = {
    "party": "party",
    "media": "media",
    "platform": "platform",
    "owned": "owned",
    "academia": "academia",
    "non_media_industry": "non_media_industry",
    "non media industry": "non_media_industry",
    "non-media industry": "non_media_industry",
    "non-media-industry": "non_media_industry",
    "nonmediaindustry": "non_media_industry",
    "government": "government",
}

_NUMBERED = {str(i + 1): token for i, token in enumerate(CATEGORY_TOKENS)}


def parse_label(reply: str) -> str | None:
    """Tolerant parse of a judge reply into a category token, else None.

    Accepts case differences, surrounding whitespace/punctuation, and a
    bare option number; rejects anything that is not just a label.
    """
    cleaned = reply.strip().strip(".,:;!\"'()[]").strip().lower()
    cleaned = re.sub(r"^\d+\s*[.)]\s*", "", cleaned)  # "3. platform" forms
    cleaned = cleaned.strip()
    if cleaned in _NUMBERED:
        return _NUMBERED[cleaned]
    return _LABEL_ALIASES.get(cleaned)


def default_prompt_path(literal_platform_labels: bool = False) -> Path:
    name = "judge_prompt_literal.txt" if literal_platform_labels else "judge_prompt.txt"
    return Path(str(importlib.resources.files("geaudit.data").joinpath(name)))


def load_prompt_template(path: str | Path) -> str:
    template = Path(path).read_text(encoding="utf-8")
    for slot in ("{url}", "{whois}"):
        if slot not in template:
            raise JudgeError(f"prompt template {path} missing slot {slot}")
    return template


def build_prompt(template: str, url: str, whois: WhoisRecord) -> str:
    return template.replace("{url}", url).replace("{whois}", whois.raw_text)


class Judge(Protocol):
    judge_id: str

    def complete(self, prompt: str) -> str: ...


@dataclass
class JudgeConfig:
    judge_id: str
    endpoint: str
    model: str
    credential_env: str = ""
    timeout: float = 60.0


class HTTPJudge:
    """Chat-completion-style judge endpoint."""

    def __init__(self, config: JudgeConfig, session: requests.Session | None = None):
        self.judge_id = config.judge_id
        self.config = config
        self._session = session or requests.Session()
        self.calls = 0

    def complete(self, prompt: str) -> str:
        self.calls += 1
        headers = {"Content-Type": "application/json"}
        if self.config.credential_env:
            token = os.environ.get(self.config.credential_env, "")
            if not token:
                raise JudgeError(
                    f"{self.judge_id}: credential env {self.config.credential_env} unset"
                )
            headers["Authorization"] = f"Bearer {token}"
        try:
            resp = self._session.post(
                self.config.endpoint,
                json={
                    "model": self.config.model,
                    "messages": [{"role": "user", "content": prompt}],
                },
                headers=headers,
                timeout=self.config.timeout,
            )
        except requests.RequestException as exc:
            raise JudgeError(f"{self.judge_id}: {exc}") from exc
        if resp.status_code != 200:
            raise JudgeError(f"{self.judge_id}: HTTP {resp.status_code}")
        try:
            content = resp.json()["choices"][0]["message"]["content"]
        except (ValueError, KeyError, IndexError) as exc:
            raise JudgeError(f"{self.judge_id}: malformed completion response") from exc
        if not isinstance(content, str):
            raise JudgeError(f"{self.judge_id}: malformed completion response")
        return content


class StaticTableJudge:
    """Offline judge: a fixed host -> label table (used by bundled fixtures).

    The prompt still flows through normally; the host is recovered from the
    "Domain URL:" line, so the table is keyed exactly like real judgments.
    """

    _URL_LINE = re.compile(r"^Domain URL:\s*(\S+)\s*$", re.MULTILINE)

    def __init__(self, judge_id: str, table: dict[str, str]):
        self.judge_id = judge_id
        self.table = {host.lower(): label for host, label in table.items()}
        self.calls = 0

    @classmethod
    def from_file(cls, judge_id: str, path: str | Path) -> StaticTableJudge:
        return cls(judge_id, json.loads(Path(path).read_text(encoding="utf-8")))

    def _host_from_prompt(self, prompt: str) -> str:
        m = self._URL_LINE.search(prompt)
        if m is None:
            raise JudgeError(f"{self.judge_id}: prompt carries no Domain URL line")
        url = m.group(1)
        host = re.sub(r"^[a-z+]+://", "", url).split("/", 1)[0].split(":", 1)[0]
        return host.lower()

    def complete(self, prompt: str) -> str:
        self.calls += 1
        host = self._host_from_prompt(prompt)
        try:
            return self.table[host]
        except KeyError:
            raise JudgeError(f"{self.judge_id}: no table entry for host {host!r}") from None


class ScriptedJudge:
    """Test judge that replays a scripted sequence of replies/exceptions."""

    def __init__(self, judge_id: str, replies):
        self.judge_id = judge_id
        self.replies = list(replies)
        self.calls = 0

    def complete(self, prompt: str) -> str:
        self.calls += 1
        if not self.replies:
            raise JudgeError(f"{self.judge_id}: script exhausted")
        reply = self.replies.pop(0)
        if isinstance(reply, Exception):
            raise reply
        return reply


def classify_with_judge(
    judge: Judge, template: str, url: str, whois: WhoisRecord
) -> str | None:
    """One judge's category token for a citation URL, or None on failure.

    A reply that does not parse as a bare label (or an endpoint error) is
    retried once; a second miss is the judge's failure for this host.
    """
    prompt = build_prompt(template, url, whois)
    for _ in range(2):
        try:
            reply = judge.complete(prompt)
        except JudgeError:
            continue
        label = parse_label(reply)
        if label is not None:
            return label
    return None
