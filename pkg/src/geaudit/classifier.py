"""Publisher classification: manifests, judge consensus, human adjudication.

Precedence is strict: a host matching the target party's manifest is
ManifestPrimary, a host matching a rival same-country party's manifest is
ManifestOpponent, and only the remaining secondary hosts reach the two
judges (whose agreed label stands).  Disagreements and judge failures queue
for human adjudication; a drained queue makes classification total.

Secondary outcomes are cached per host, so judges run at most once per host
per run scope, while manifest status stays relative to each question's
target party.
"""

from __future__ import annotations

import datetime
import enum
import json
from dataclasses import dataclass, field
from pathlib import Path

from .corpus import Party
from .domains import host_matches, registrable_domain
from .ge_client import AnswerRecord, CitationRef
from .judges import Judge, classify_with_judge
from .whois import WhoisClient


class ClassifierError(ValueError):
    pass


class PublisherCategory(enum.Enum):
    PARTY = "party"
    MEDIA = "media"
    PLATFORM = "platform"
    OWNED = "owned"
    ACADEMIA = "academia"
    NON_MEDIA_INDUSTRY = "non_media_industry"
    GOVERNMENT = "government"


class BarrierClass(enum.Enum):
    PRIMARY = "primary"
    OPPONENT = "opponent"
    LOW = "low"
    MEDIUM = "medium"
    HIGH = "high"


class VerdictOrigin(enum.Enum):
    MANIFEST_PRIMARY = "manifest_primary"
    MANIFEST_OPPONENT = "manifest_opponent"
    JUDGE_CONSENSUS = "judge_consensus"
    HUMAN = "human"


# Secondary categories map to barriers by how hard it is for an outside
# actor to get content published there.  A judge- or human-assigned Party
# label (a party site outside every configured manifest, e.g. a foreign
# party) counts as an organization with editorial control over its own site.
_CATEGORY_BARRIER = {
    PublisherCategory.PLATFORM: BarrierClass.LOW,
    PublisherCategory.OWNED: BarrierClass.LOW,
    PublisherCategory.MEDIA: BarrierClass.MEDIUM,
    PublisherCategory.NON_MEDIA_INDUSTRY: BarrierClass.MEDIUM,
    PublisherCategory.PARTY: BarrierClass.MEDIUM,
    PublisherCategory.ACADEMIA: BarrierClass.HIGH,
    PublisherCategory.GOVERNMENT: BarrierClass.HIGH,
}


@dataclass(frozen=True)
class PublisherVerdict:
    host: str
    category: PublisherCategory
    origin: VerdictOrigin
    judge_votes: tuple[tuple[str, str | None], ...] | None
    decided_at: str

    def __post_init__(self):
        if self.origin is VerdictOrigin.JUDGE_CONSENSUS:
            if self.judge_votes is None or len(self.judge_votes) != 2:
                raise ClassifierError(f"{self.host}: consensus verdict needs two votes")
            (_, v1), (_, v2) = self.judge_votes
            if v1 != v2 or v1 != self.category.value:
                raise ClassifierError(f"{self.host}: consensus votes disagree")

    def to_dict(self) -> dict:
        return {
            "host": self.host,
            "category": self.category.value,
            "origin": self.origin.value,
            "judge_votes": [list(v) for v in self.judge_votes] if self.judge_votes else None,
            "decided_at": self.decided_at,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "PublisherVerdict":
        votes = data.get("judge_votes")
        return cls(
            host=data["host"],
            category=PublisherCategory(data["category"]),
            origin=VerdictOrigin(data["origin"]),
            judge_votes=tuple((j, v) for j, v in votes) if votes else None,
            decided_at=data.get("decided_at", ""),
        )


@dataclass(frozen=True)
class AdjudicationItem:
    host: str
    whois_summary: str
    votes: tuple[tuple[str, str | None], ...]
    status: str = "pending"
    resolution: tuple[str, str, str] | None = None  # (category, adjudicator, at)

    def __post_init__(self):
        if self.status not in ("pending", "resolved"):
            raise ClassifierError(f"bad adjudication status {self.status!r}")
        if self.status == "resolved" and self.resolution is None:
            raise ClassifierError(f"{self.host}: resolved without resolution")

    def to_dict(self) -> dict:
        return {
            "host": self.host,
            "whois_summary": self.whois_summary,
            "votes": [list(v) for v in self.votes],
            "status": self.status,
            "resolution": list(self.resolution) if self.resolution else None,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "AdjudicationItem":
        resolution = data.get("resolution")
        return cls(
            host=data["host"],
            whois_summary=data.get("whois_summary", ""),
            votes=tuple((j, v) for j, v in data.get("votes", [])),
            status=data.get("status", "pending"),
            resolution=tuple(resolution) if resolution else None,
        )


def identify_primary(citation: CitationRef, party: Party) -> bool:
    """True iff the citation host falls under the party's own manifest."""
    return any(host_matches(citation.host, d) for d in party.domain_manifest)


def identify_opponent(
    citation: CitationRef, target_party: Party, all_parties: list[Party]
) -> Party | None:
    """The rival same-country party whose manifest claims the host, if any."""
    for party in all_parties:
        if party.id == target_party.id or party.country != target_party.country:
            continue
        if any(host_matches(citation.host, d) for d in party.domain_manifest):
            return party
    return None


def to_barrier(verdict: PublisherVerdict) -> BarrierClass:
    """Total mapping of verdicts onto content-injection-barrier classes."""
    if verdict.origin is VerdictOrigin.MANIFEST_PRIMARY:
        return BarrierClass.PRIMARY
    if verdict.origin is VerdictOrigin.MANIFEST_OPPONENT:
        return BarrierClass.OPPONENT
    return _CATEGORY_BARRIER[verdict.category]


@dataclass(frozen=True)
class Decision:
    host: str
    category: str
    adjudicator: str
    timestamp: str = ""

    def __post_init__(self):
        if self.category not in {c.value for c in PublisherCategory}:
            raise ClassifierError(f"unknown category {self.category!r} for {self.host}")


def read_decisions(path: str | Path) -> list[Decision]:
    """Load a line-delimited decisions file; missing file means no decisions."""
    path = Path(path)
    if not path.exists():
        return []
    decisions = []
    for lineno, line in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
            decisions.append(
                Decision(
                    host=obj["host"],
                    category=obj["category"],
                    adjudicator=obj["adjudicator"],
                    timestamp=obj.get("timestamp", ""),
                )
            )
        except (json.JSONDecodeError, KeyError) as exc:
            raise ClassifierError(f"{path}:{lineno}: bad decision line ({exc})") from exc
    return decisions


def append_decision(path: str | Path, decision: Decision) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "a", encoding="utf-8") as fh:
        fh.write(
            json.dumps(
                {
                    "host": decision.host,
                    "category": decision.category,
                    "adjudicator": decision.adjudicator,
                    "timestamp": decision.timestamp,
                },
                ensure_ascii=False,
                sort_keys=True,
            )
            + "\n"
        )


@dataclass
class RunClassification:
    """Per-(host, target party) verdicts plus the host-level pending queue."""

    outcomes: dict[tuple[str, str], PublisherVerdict] = field(default_factory=dict)
    pending: dict[str, AdjudicationItem] = field(default_factory=dict)

    def verdict_for(self, host: str, party_id: str) -> PublisherVerdict | None:
        return self.outcomes.get((host, party_id))

    @property
    def complete(self) -> bool:
        return not self.pending

    def to_dict(self) -> dict:
        return {
            "outcomes": [
                [host, party_id, verdict.to_dict()]
                for (host, party_id), verdict in sorted(self.outcomes.items())
            ],
            "pending": [self.pending[h].to_dict() for h in sorted(self.pending)],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "RunClassification":
        outcomes = {
            (host, party_id): PublisherVerdict.from_dict(verdict)
            for host, party_id, verdict in data.get("outcomes", [])
        }
        pending = {
            item["host"]: AdjudicationItem.from_dict(item) for item in data.get("pending", [])
        }
        return cls(outcomes=outcomes, pending=pending)


def _default_now() -> str:
    return (
        datetime.datetime.now(datetime.timezone.utc)
        .replace(microsecond=0)
        .isoformat()
        .replace("+00:00", "Z")
    )


class Classifier:
    """λ(c): stateful classifier over one run scope."""

    def __init__(
        self,
        parties: list[Party],
        judges: tuple[Judge, Judge],
        whois_client: WhoisClient,
        prompt_template: str,
        *,
        now_iso=_default_now,
    ):
        if len(judges) != 2 or judges[0].judge_id == judges[1].judge_id:
            raise ClassifierError("exactly two distinct judges required")
        self.parties = list(parties)
        self.judges = judges
        self.whois = whois_client
        self.template = prompt_template
        self._now = now_iso
        # host -> party-independent secondary outcome (verdict or queue item)
        self._secondary: dict[str, PublisherVerdict | AdjudicationItem] = {}

    @property
    def judge_calls(self) -> int:
        return sum(getattr(j, "calls", 0) for j in self.judges)

    def seed_cache(self, classification: RunClassification) -> None:
        """Preload host-level secondary outcomes from a prior snapshot.

        Judge and human verdicts are host-scoped, so a reclassification of
        the same record set must not consult the judges again.  Manifest
        verdicts stay party-relative and are recomputed from the manifests.
        """
        for item in classification.pending.values():
            self._secondary.setdefault(item.host, item)
        for verdict in classification.outcomes.values():
            if verdict.origin in (VerdictOrigin.JUDGE_CONSENSUS, VerdictOrigin.HUMAN):
                self._secondary[verdict.host] = verdict

    def _classify_secondary(self, citation: CitationRef) -> PublisherVerdict | AdjudicationItem:
        host = citation.host
        cached = self._secondary.get(host)
        if cached is not None:
            return cached
        whois_record = self.whois.lookup(registrable_domain(host))
        votes = tuple(
            (judge.judge_id, classify_with_judge(judge, self.template, citation.url, whois_record))
            for judge in self.judges
        )
        (_, v1), (_, v2) = votes
        if v1 is not None and v1 == v2 and v1 != PublisherCategory.PARTY.value:
            outcome: PublisherVerdict | AdjudicationItem = PublisherVerdict(
                host=host,
                category=PublisherCategory(v1),
                origin=VerdictOrigin.JUDGE_CONSENSUS,
                judge_votes=votes,
                decided_at=self._now(),
            )
        else:
            # disagreement, judge failure, or an agreed Party label that no
            # manifest claims: all need a human decision
            outcome = AdjudicationItem(
                host=host,
                whois_summary=whois_record.raw_text[:500],
                votes=votes,
            )
        self._secondary[host] = outcome
        return outcome

    def classify_citation(
        self, citation: CitationRef, target_party: Party
    ) -> PublisherVerdict | AdjudicationItem:
        if identify_primary(citation, target_party):
            return PublisherVerdict(
                host=citation.host,
                category=PublisherCategory.PARTY,
                origin=VerdictOrigin.MANIFEST_PRIMARY,
                judge_votes=None,
                decided_at=self._now(),
            )
        if identify_opponent(citation, target_party, self.parties) is not None:
            return PublisherVerdict(
                host=citation.host,
                category=PublisherCategory.PARTY,
                origin=VerdictOrigin.MANIFEST_OPPONENT,
                judge_votes=None,
                decided_at=self._now(),
            )
        return self._classify_secondary(citation)

    def classify_run(
        self, records: list[AnswerRecord], party_by_question: dict[str, Party]
    ) -> RunClassification:
        """Classify every citation occurrence in a record set."""
        result = RunClassification()
        for record in records:
            party = party_by_question.get(record.question_id)
            if party is None:
                raise ClassifierError(f"no target party for question {record.question_id}")
            for citation in record.citations:
                key = (citation.host, party.id)
                if key in result.outcomes:
                    continue
                outcome = self.classify_citation(citation, party)
                if isinstance(outcome, PublisherVerdict):
                    result.outcomes[key] = outcome
                else:
                    result.pending[citation.host] = outcome
        return result

    def apply_decisions(self, decisions: list[Decision]) -> list[PublisherVerdict]:
        """Resolve pending hosts with human verdicts; idempotent on re-apply."""
        emitted = []
        for decision in decisions:
            existing = self._secondary.get(decision.host)
            if isinstance(existing, PublisherVerdict):
                if (
                    existing.origin is VerdictOrigin.HUMAN
                    and existing.category.value == decision.category
                ):
                    continue  # idempotent re-application
                raise ClassifierError(
                    f"decision for {decision.host} conflicts with existing "
                    f"{existing.origin.value}/{existing.category.value} verdict"
                )
            if existing is None:
                pending_hosts = sorted(
                    h for h, o in self._secondary.items() if isinstance(o, AdjudicationItem)
                )
                raise ClassifierError(
                    f"decision references unknown host {decision.host!r}; "
                    f"pending hosts: {pending_hosts}"
                )
            at = decision.timestamp or self._now()
            verdict = PublisherVerdict(
                host=decision.host,
                category=PublisherCategory(decision.category),
                origin=VerdictOrigin.HUMAN,
                judge_votes=existing.votes,
                decided_at=at,
            )
            self._secondary[decision.host] = verdict
            emitted.append(verdict)
        return emitted

    def pending_items(self) -> list[AdjudicationItem]:
        return sorted(
            (o for o in self._secondary.values() if isinstance(o, AdjudicationItem)),
            key=lambda item: item.host,
        )
