"""Question templates, party manifests, and study configuration.

Everything here is pure data: load once, validate, render the concrete
question set deterministically.  The bundled data files under
``geaudit/data`` carry the default template set (20 questions, English and
Japanese) and the default party manifests for the U.S. and Japan.
"""

from __future__ import annotations

import importlib.resources
from dataclasses import dataclass, field
from pathlib import Path

import yaml

from .domains import DomainError, normalize_manifest_entry

PLACEHOLDER = "{PARTY}"

TEMPLATE_KINDS = ("policy", "ideology")


class CorpusError(ValueError):
    """Malformed or inconsistent corpus data (manifest, templates, config)."""


@dataclass(frozen=True)
class QuestionTemplate:
    id: str
    kind: str
    text_by_language: dict[str, str]

    def __post_init__(self):
        if self.kind not in TEMPLATE_KINDS:
            raise CorpusError(f"template {self.id}: unknown kind {self.kind!r}")
        for lang, text in self.text_by_language.items():
            n = text.count(PLACEHOLDER)
            if n != 1:
                raise CorpusError(
                    f"template {self.id} [{lang}]: expected exactly one "
                    f"{PLACEHOLDER} placeholder, found {n}"
                )


@dataclass(frozen=True)
class Party:
    id: str
    country: str
    display_name_by_language: dict[str, str]
    domain_manifest: frozenset[str]
    aliases: tuple[str, ...] = ()

    def __post_init__(self):
        if not self.domain_manifest:
            raise CorpusError(f"party {self.id}: empty domain manifest")
        if not self.country or len(self.country) != 2 or not self.country.isalpha():
            raise CorpusError(f"party {self.id}: bad country code {self.country!r}")
        object.__setattr__(self, "country", self.country.upper())


@dataclass(frozen=True)
class StudyConfig:
    countries: tuple[str, ...]
    parties: tuple[str, ...]
    providers: tuple[str, ...]
    repeats: int
    language_by_country: dict[str, str]

    def __post_init__(self):
        if self.repeats < 1:
            raise CorpusError(f"repeats must be >= 1, got {self.repeats}")
        object.__setattr__(self, "countries", tuple(c.upper() for c in self.countries))
        object.__setattr__(
            self,
            "language_by_country",
            {c.upper(): lang for c, lang in self.language_by_country.items()},
        )
        for c in self.countries:
            if c not in self.language_by_country:
                raise CorpusError(f"no language configured for country {c!r}")


@dataclass(frozen=True)
class Question:
    id: str
    template_id: str
    party_id: str
    language: str
    rendered_text: str

    def __post_init__(self):
        if PLACEHOLDER in self.rendered_text:
            raise CorpusError(f"question {self.id}: unsubstituted placeholder")


def _data_path(name: str) -> Path:
    return Path(str(importlib.resources.files("geaudit.data").joinpath(name)))


def default_templates_path() -> Path:
    return _data_path("templates.yaml")


def default_parties_path() -> Path:
    return _data_path("parties.yaml")


def load_templates(path: str | Path) -> list[QuestionTemplate]:
    """Load a template file: ``{version: 1, templates: [{id, kind, text: {lang: ..}}]}``."""
    raw = _load_yaml(path)
    items = raw.get("templates")
    if not isinstance(items, list) or not items:
        raise CorpusError(f"{path}: no templates")
    templates = []
    seen = set()
    for item in items:
        tid = str(item["id"])
        if tid in seen:
            raise CorpusError(f"{path}: duplicate template id {tid!r}")
        seen.add(tid)
        templates.append(
            QuestionTemplate(
                id=tid,
                kind=str(item["kind"]),
                text_by_language={str(k): str(v) for k, v in item["text"].items()},
            )
        )
    return templates


def load_manifest(path: str | Path) -> list[Party]:
    """Load and validate a party manifest file.

    Format: ``{version: 1, parties: [{id, country, names: {lang: name},
    domains: [..], aliases: [..]}]}``.  Domain entries are normalized
    (scheme/case/path stripped); duplicate party ids and domains claimed by
    two parties are rejected so opponent matching stays unambiguous.
    """
    raw = _load_yaml(path)
    items = raw.get("parties")
    if not isinstance(items, list) or not items:
        raise CorpusError(f"{path}: no parties")
    parties: list[Party] = []
    seen_ids: set[str] = set()
    domain_owner: dict[str, str] = {}
    for item in items:
        pid = str(item["id"])
        if pid in seen_ids:
            raise CorpusError(f"{path}: duplicate party id {pid!r}")
        seen_ids.add(pid)
        try:
            domains = frozenset(
                normalize_manifest_entry(str(d)) for d in item.get("domains", [])
            )
        except DomainError as exc:
            raise CorpusError(f"{path}: party {pid}: {exc}") from exc
        for d in sorted(domains):
            if d in domain_owner:
                raise CorpusError(
                    f"{path}: domain {d!r} claimed by both "
                    f"{domain_owner[d]!r} and {pid!r}"
                )
            domain_owner[d] = pid
        parties.append(
            Party(
                id=pid,
                country=str(item["country"]).lower(),
                display_name_by_language={
                    str(k): str(v) for k, v in item.get("names", {}).items()
                },
                domain_manifest=domains,
                aliases=tuple(str(a) for a in item.get("aliases", [])),
            )
        )
    return parties


def render_questions(
    templates: list[QuestionTemplate],
    parties: list[Party],
    config: StudyConfig,
) -> list[Question]:
    """Render the concrete question set: templates x parties, localized.

    Parties outside the configured countries are skipped.  Ordering is
    deterministic (template id, then party id) and rendering is injective:
    the question id is ``<template_id>-<party_id>``.
    """
    selected = [p for p in parties if p.country in config.countries]
    party_ids = {p.id for p in selected}
    for pid in config.parties:
        if pid not in party_ids:
            raise CorpusError(f"configured party {pid!r} not in manifest")
    if config.parties:
        selected = [p for p in selected if p.id in set(config.parties)]
    questions = []
    for template in sorted(templates, key=lambda t: t.id):
        for party in sorted(selected, key=lambda p: p.id):
            language = config.language_by_country[party.country]
            text = template.text_by_language.get(language)
            if text is None:
                raise CorpusError(
                    f"template {template.id} has no {language!r} rendering"
                )
            name = party.display_name_by_language.get(language)
            if not name:
                raise CorpusError(
                    f"party {party.id} has no {language!r} display name"
                )
            questions.append(
                Question(
                    id=f"{template.id}-{party.id}",
                    template_id=template.id,
                    party_id=party.id,
                    language=language,
                    rendered_text=text.replace(PLACEHOLDER, name),
                )
            )
    return questions


def _load_yaml(path: str | Path) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            raw = yaml.safe_load(fh)
    except yaml.YAMLError as exc:
        raise CorpusError(f"{path}: parse error: {exc}") from exc
    if not isinstance(raw, dict):
        raise CorpusError(f"{path}: expected a mapping at top level")
    return raw
