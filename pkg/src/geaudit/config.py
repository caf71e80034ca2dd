"""Run configuration: one YAML file describing an audit end to end.

The config is the unit of provenance: its canonical digest identifies what
a run was asked to do (providers, judges, seeds, prompt variant, corpus
inputs), and every stage records it.  Offline-determinism knobs — fixture
replay, static judge tables, whois off, a fixed provenance timestamp —
are ordinary config, not special modes.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass
from pathlib import Path

import yaml

from .adapters import ProviderConfig
from .corpus import StudyConfig


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class JudgeSpec:
    """One judge backend: an offline label table or a chat-completion API."""

    judge_id: str
    kind: str  # "static" | "http"
    table_path: str = ""  # static
    endpoint: str = ""  # http
    model: str = ""
    credential_env: str = ""
    timeout: float = 30.0

    def __post_init__(self):
        if self.kind not in ("static", "http"):
            raise ConfigError(f"judge {self.judge_id}: unknown kind {self.kind!r}")
        if self.kind == "static" and not self.table_path:
            raise ConfigError(f"judge {self.judge_id}: static judge needs table_path")
        if self.kind == "http" and not self.endpoint:
            raise ConfigError(f"judge {self.judge_id}: http judge needs endpoint")


@dataclass(frozen=True)
class AuditConfig:
    run_id: str
    countries: tuple[str, ...]
    language_by_country: dict[str, str]
    repeats: int
    seed: int
    embedding_backend: str  # "hash" or "sbert:<model name>"
    judge_prompt: str  # "default" | "literal"
    whois_mode: str  # "on" | "off"
    providers: tuple[ProviderConfig, ...]
    judges: tuple[JudgeSpec, ...]
    fixtures: tuple[str, ...] = ()
    party_ids: tuple[str, ...] = ()  # empty = every manifest party in scope
    templates_path: str = ""  # empty = bundled
    parties_path: str = ""
    decisions_file: str = "decisions.jsonl"
    pages_offline: bool = False
    timestamp: str = ""  # fixed provenance timestamp; empty = wall clock
    report_formats: tuple[str, ...] = ("json", "csv", "svg")

    def __post_init__(self):
        if not self.run_id:
            raise ConfigError("run_id required")
        if self.repeats < 1:
            raise ConfigError(f"repeats must be >= 1, got {self.repeats}")
        if self.judge_prompt not in ("default", "literal"):
            raise ConfigError(f"judge_prompt must be default or literal, got {self.judge_prompt!r}")
        if self.whois_mode not in ("on", "off"):
            raise ConfigError(f"whois_mode must be on or off, got {self.whois_mode!r}")
        if len(self.judges) != 2:
            raise ConfigError(f"exactly two judges required, got {len(self.judges)}")
        if not self.providers:
            raise ConfigError("at least one provider required")
        object.__setattr__(self, "countries", tuple(c.upper() for c in self.countries))
        object.__setattr__(
            self,
            "language_by_country",
            {c.upper(): l for c, l in self.language_by_country.items()},
        )
        for country in self.countries:
            if country not in self.language_by_country:
                raise ConfigError(f"no language configured for {country}")

    def study_config(self) -> StudyConfig:
        return StudyConfig(
            countries=self.countries,
            parties=self.party_ids,
            providers=tuple(p.name for p in self.providers),
            repeats=self.repeats,
            language_by_country=dict(self.language_by_country),
        )


_PATH_FIELDS = ("fixtures", "templates_path", "parties_path", "decisions_file")


def config_digest(config: AuditConfig) -> str:
    """Location-independent digest of what the audit was asked to do.

    Filesystem path bindings are excluded: the same audit checked out at a
    different root must keep its digest.  The files those paths point at
    are digested by content where they feed a stage (fixtures and corpus in
    collect, judge tables and the decisions log in classify).
    """
    doc = asdict(config)
    for field_name in _PATH_FIELDS:
        doc.pop(field_name)
    for judge in doc["judges"]:
        judge.pop("table_path")
    canonical = json.dumps(doc, ensure_ascii=False, sort_keys=True)
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def _provider(obj: dict) -> ProviderConfig:
    try:
        return ProviderConfig(
            name=obj["name"],
            style=obj["style"],
            endpoint=obj.get("endpoint", ""),
            model=obj.get("model", ""),
            credential_env=obj.get("credential_env", ""),
            timeout=float(obj.get("timeout", 60.0)),
        )
    except KeyError as exc:
        raise ConfigError(f"provider entry missing field {exc}") from exc


def _judge(obj: dict) -> JudgeSpec:
    try:
        return JudgeSpec(
            judge_id=obj["judge_id"],
            kind=obj["kind"],
            table_path=obj.get("table_path", ""),
            endpoint=obj.get("endpoint", ""),
            model=obj.get("model", ""),
            credential_env=obj.get("credential_env", ""),
            timeout=float(obj.get("timeout", 30.0)),
        )
    except KeyError as exc:
        raise ConfigError(f"judge entry missing field {exc}") from exc


def load_config(path: str | Path) -> AuditConfig:
    """Parse an audit config; relative paths stay relative to the file."""
    path = Path(path)
    try:
        raw = yaml.safe_load(path.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}")
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: bad YAML ({exc})") from exc
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: config must be a mapping")
    base = path.parent

    def _rel(p: str) -> str:
        return str((base / p)) if p and not Path(p).is_absolute() else p

    try:
        judges = tuple(_judge(j) for j in raw.get("judges", []))
        judges = tuple(
            JudgeSpec(
                judge_id=j.judge_id,
                kind=j.kind,
                table_path=_rel(j.table_path),
                endpoint=j.endpoint,
                model=j.model,
                credential_env=j.credential_env,
                timeout=j.timeout,
            )
            for j in judges
        )
        return AuditConfig(
            run_id=raw.get("run_id", ""),
            countries=tuple(raw.get("countries", [])),
            language_by_country=dict(raw.get("language_by_country", {})),
            repeats=int(raw.get("repeats", 1)),
            seed=int(raw.get("seed", 0)),
            embedding_backend=raw.get("embedding_backend", "hash"),
            judge_prompt=raw.get("judge_prompt", "default"),
            whois_mode=raw.get("whois_mode", "on"),
            providers=tuple(_provider(p) for p in raw.get("providers", [])),
            judges=judges,
            fixtures=tuple(_rel(f) for f in raw.get("fixtures", [])),
            party_ids=tuple(raw.get("party_ids", [])),
            templates_path=_rel(raw.get("templates_path", "")),
            parties_path=_rel(raw.get("parties_path", "")),
            decisions_file=_rel(raw.get("decisions_file", "decisions.jsonl")),
            pages_offline=bool(raw.get("pages_offline", False)),
            timestamp=raw.get("timestamp", ""),
            report_formats=tuple(raw.get("report_formats", ["json", "csv", "svg"])),
        )
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"{path}: {exc}") from exc
