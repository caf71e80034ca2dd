"""Aggregation: barrier proportions, band matrices, web-structure tests, stats.

Everything here is a pure function of already-classified, already-reflected
run data: records in, tables out.  Aggregations iterate in sorted order so
output is identical under any permutation of the input records, counts are
citation *occurrences* (an answer citing one host twice contributes two),
and nothing is silently dropped — exclusions (failed reflections, pending
hosts under the explicit allow-pending escape) are counted and reported.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .classifier import BarrierClass, RunClassification, to_barrier
from .corpus import Party
from .ge_client import AnswerRecord, normalize_url
from .harvest import StructFeatures
from .reflection import SimilarityBand, split_sentences
from .stattests import Sample, TestResult, balance_downsample, ks_two_sample, mann_whitney_u

ALL_PARTIES = "all-parties"

BARRIER_TOKENS = tuple(b.value for b in BarrierClass)
BAND_TOKENS = tuple(b.value for b in SimilarityBand)

WEBSTRUCT_METRICS = ("link_count", "text_density", "text_length", "ul_count")


class AnalyticsError(ValueError):
    pass


def _party_for(record: AnswerRecord, party_by_question: Mapping[str, Party]) -> Party:
    party = party_by_question.get(record.question_id)
    if party is None:
        raise AnalyticsError(f"no target party for question {record.question_id}")
    return party


def _require_complete(classification: RunClassification, allow_pending: bool) -> None:
    if classification.pending and not allow_pending:
        hosts = ", ".join(sorted(classification.pending))
        raise AnalyticsError(f"pending adjudications for hosts: {hosts}")


@dataclass(frozen=True)
class ProportionTable:
    """Barrier-class occurrence counts and proportions for one group."""

    country: str
    party_id: str  # a party id, or ALL_PARTIES for a per-provider rollup
    provider: str
    counts: dict[str, int]
    total: int
    excluded_pending: int = 0

    @property
    def proportions(self) -> dict[str, float]:
        if self.total == 0:
            return {}
        return {k: self.counts[k] / self.total for k in BARRIER_TOKENS}

    def to_dict(self) -> dict:
        return {
            "country": self.country,
            "party": self.party_id,
            "provider": self.provider,
            "counts": dict(self.counts),
            "total": self.total,
            "excluded_pending": self.excluded_pending,
            "proportions": self.proportions,
        }


def category_proportions(
    records: list[AnswerRecord],
    classification: RunClassification,
    party_by_question: Mapping[str, Party],
    *,
    allow_pending: bool = False,
) -> list[ProportionTable]:
    """Per (country, party, provider) barrier proportions plus All-Parties rollups.

    Counts are citation occurrences.  With ``allow_pending`` the unresolved
    hosts are excluded from counts but reported per table; otherwise any
    pending adjudication refuses the whole aggregation.
    """
    _require_complete(classification, allow_pending)
    counts: dict[tuple[str, str, str], dict[str, int]] = {}
    pending_excluded: dict[tuple[str, str, str], int] = {}
    for record in records:
        party = _party_for(record, party_by_question)
        keys = [
            (party.country, party.id, record.provider),
            (party.country, ALL_PARTIES, record.provider),
        ]
        for key in keys:  # a group with zero citations still gets a table
            counts.setdefault(key, {t: 0 for t in BARRIER_TOKENS})
        for citation in record.citations:
            verdict = classification.verdict_for(citation.host, party.id)
            if verdict is None:
                if citation.host not in classification.pending:
                    raise AnalyticsError(
                        f"no verdict for host {citation.host} / party {party.id}"
                    )
                for key in keys:
                    pending_excluded[key] = pending_excluded.get(key, 0) + 1
                    counts.setdefault(key, {t: 0 for t in BARRIER_TOKENS})
                continue
            barrier = to_barrier(verdict).value
            for key in keys:
                group = counts.setdefault(key, {t: 0 for t in BARRIER_TOKENS})
                group[barrier] += 1
    tables = []
    for key in sorted(counts):
        country, party_id, provider = key
        group = counts[key]
        tables.append(
            ProportionTable(
                country=country,
                party_id=party_id,
                provider=provider,
                counts=group,
                total=sum(group.values()),
                excluded_pending=pending_excluded.get(key, 0),
            )
        )
    return tables


@dataclass(frozen=True)
class ReflectionOutcome:
    """One citation occurrence's reflection result (or its absence)."""

    question_id: str
    repeat_index: int
    provider: str
    citation_index: int
    url: str
    sim_max: float | None
    band: str | None
    answer_sentence_index: int | None = None
    citation_sentence_index: int | None = None
    cross_language: bool = False

    def __post_init__(self):
        if (self.sim_max is None) != (self.band is None):
            raise AnalyticsError(f"{self.url}: sim_max and band must be absent together")
        if self.band is not None and self.band not in BAND_TOKENS:
            raise AnalyticsError(f"{self.url}: bad band {self.band!r}")

    @property
    def available(self) -> bool:
        return self.band is not None

    @property
    def key(self) -> tuple[str, int, str, int]:
        return (self.question_id, self.repeat_index, self.provider, self.citation_index)

    def to_dict(self) -> dict:
        return {
            "question_id": self.question_id,
            "repeat_index": self.repeat_index,
            "provider": self.provider,
            "citation_index": self.citation_index,
            "url": self.url,
            "sim_max": self.sim_max,
            "band": self.band,
            "answer_sentence_index": self.answer_sentence_index,
            "citation_sentence_index": self.citation_sentence_index,
            "cross_language": self.cross_language,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ReflectionOutcome":
        return cls(
            question_id=d["question_id"],
            repeat_index=d["repeat_index"],
            provider=d["provider"],
            citation_index=d["citation_index"],
            url=d["url"],
            sim_max=d["sim_max"],
            band=d["band"],
            answer_sentence_index=d.get("answer_sentence_index"),
            citation_sentence_index=d.get("citation_sentence_index"),
            cross_language=d.get("cross_language", False),
        )


@dataclass(frozen=True)
class BandMatrix:
    """Band × barrier-class counts for one (country, provider)."""

    country: str
    provider: str
    counts: dict[str, dict[str, int]]  # band token -> barrier token -> count
    excluded_unavailable: int = 0
    excluded_pending: int = 0

    @property
    def band_totals(self) -> dict[str, int]:
        return {band: sum(self.counts[band].values()) for band in BAND_TOKENS}

    @property
    def included_total(self) -> int:
        return sum(self.band_totals.values())

    @property
    def proportions(self) -> dict[str, dict[str, float]]:
        out = {}
        for band in BAND_TOKENS:
            total = sum(self.counts[band].values())
            out[band] = (
                {} if total == 0 else {k: self.counts[band][k] / total for k in BARRIER_TOKENS}
            )
        return out

    def to_dict(self) -> dict:
        return {
            "country": self.country,
            "provider": self.provider,
            "counts": {band: dict(self.counts[band]) for band in BAND_TOKENS},
            "band_totals": self.band_totals,
            "included_total": self.included_total,
            "excluded_unavailable": self.excluded_unavailable,
            "excluded_pending": self.excluded_pending,
            "proportions": self.proportions,
        }


def coverage_bands(
    records: list[AnswerRecord],
    classification: RunClassification,
    party_by_question: Mapping[str, Party],
    reflections: list[ReflectionOutcome],
    *,
    allow_pending: bool = False,
) -> list[BandMatrix]:
    """Band × class matrices per (country, provider).

    Every classified citation occurrence must carry a ReflectionOutcome —
    a missing one is a pipeline gap and refuses the aggregation; an
    *unavailable* one (page never loaded, empty text) is counted as excluded.
    """
    _require_complete(classification, allow_pending)
    by_key = {o.key: o for o in reflections}
    counts: dict[tuple[str, str], dict[str, dict[str, int]]] = {}
    excluded_unavailable: dict[tuple[str, str], int] = {}
    excluded_pending: dict[tuple[str, str], int] = {}
    gaps = []
    for record in records:
        party = _party_for(record, party_by_question)
        group = (party.country, record.provider)
        matrix = counts.setdefault(
            group, {band: {t: 0 for t in BARRIER_TOKENS} for band in BAND_TOKENS}
        )
        for index, citation in enumerate(record.citations):
            outcome = by_key.get(
                (record.question_id, record.repeat_index, record.provider, index)
            )
            if outcome is None:
                gaps.append(
                    f"{record.question_id}/r{record.repeat_index}/"
                    f"{record.provider}#{index}"
                )
                continue
            verdict = classification.verdict_for(citation.host, party.id)
            if verdict is None:
                excluded_pending[group] = excluded_pending.get(group, 0) + 1
                continue
            if not outcome.available:
                excluded_unavailable[group] = excluded_unavailable.get(group, 0) + 1
                continue
            matrix[outcome.band][to_barrier(verdict).value] += 1
    if gaps:
        raise AnalyticsError(
            "reflections missing for classified citations: " + ", ".join(sorted(gaps))
        )
    return [
        BandMatrix(
            country=country,
            provider=provider,
            counts=counts[(country, provider)],
            excluded_unavailable=excluded_unavailable.get((country, provider), 0),
            excluded_pending=excluded_pending.get((country, provider), 0),
        )
        for country, provider in sorted(counts)
    ]


@dataclass(frozen=True)
class MetricComparison:
    metric: str
    mw: TestResult
    ks: TestResult

    def to_dict(self) -> dict:
        return {"metric": self.metric, "mw": self.mw.to_dict(), "ks": self.ks.to_dict()}


@dataclass(frozen=True)
class WebstructTable:
    """Cited-vs-visited-uncited structural comparison for one provider pool."""

    country: str
    provider: str
    skipped: bool = False
    reason: str = ""
    n_cited: int = 0
    n_other: int = 0
    n_cited_raw: int = 0
    n_other_raw: int = 0
    excluded_cited: int = 0
    excluded_other: int = 0
    seed: int = 0
    metrics: tuple[MetricComparison, ...] = ()

    def to_dict(self) -> dict:
        return {
            "country": self.country,
            "provider": self.provider,
            "skipped": self.skipped,
            "reason": self.reason,
            "n_cited": self.n_cited,
            "n_other": self.n_other,
            "n_cited_raw": self.n_cited_raw,
            "n_other_raw": self.n_other_raw,
            "excluded_cited": self.excluded_cited,
            "excluded_other": self.excluded_other,
            "seed": self.seed,
            "metrics": [m.to_dict() for m in self.metrics],
        }


def _pool_features(
    urls: list[str],
    features_for_url: Mapping[str, StructFeatures | None],
    pool_name: str,
) -> tuple[list[StructFeatures], int]:
    feats = []
    excluded = 0
    gaps = []
    for url in urls:
        if url not in features_for_url:
            gaps.append(url)
        elif features_for_url[url] is None:
            excluded += 1
        else:
            feats.append(features_for_url[url])
    if gaps:
        raise AnalyticsError(
            f"features missing for {pool_name} pool: " + ", ".join(sorted(gaps)[:10])
        )
    return feats, excluded


def webstruct_analysis(
    records: list[AnswerRecord],
    party_by_question: Mapping[str, Party],
    features_for_url: Mapping[str, StructFeatures | None],
    country: str,
    seed: int,
) -> list[WebstructTable]:
    """Per qualifying provider: cited pages vs visited-but-uncited pages.

    Only answers that expose their visited-source list S contribute; the
    pools are unique normalized URLs (C and S∖C), the larger pool is
    downsampled to the smaller with the recorded seed, and each structural
    metric gets both a Mann-Whitney U and a KS test.
    """
    country = country.upper()
    scoped = [
        r for r in records if _party_for(r, party_by_question).country == country
    ]
    tables = []
    for provider in sorted({r.provider for r in scoped}):
        provider_records = [r for r in scoped if r.provider == provider]
        exposing = [r for r in provider_records if r.visited_sources is not None]
        if not exposing:
            tables.append(
                WebstructTable(
                    country=country,
                    provider=provider,
                    skipped=True,
                    reason="provider does not expose visited sources",
                    seed=seed,
                )
            )
            continue
        cited = {normalize_url(c.url) for r in exposing for c in r.citations}
        visited = {normalize_url(u) for r in exposing for u in r.visited_sources}
        other = visited - cited
        cited_feats, excl_c = _pool_features(sorted(cited), features_for_url, "cited")
        other_feats, excl_o = _pool_features(sorted(other), features_for_url, "uncited")
        if not cited_feats or not other_feats:
            tables.append(
                WebstructTable(
                    country=country,
                    provider=provider,
                    skipped=True,
                    reason="a pool is empty after exclusions",
                    n_cited_raw=len(cited_feats),
                    n_other_raw=len(other_feats),
                    excluded_cited=excl_c,
                    excluded_other=excl_o,
                    seed=seed,
                )
            )
            continue
        target = min(len(cited_feats), len(other_feats))
        metrics = []
        balanced_sizes = (target, target)
        for metric in WEBSTRUCT_METRICS:
            a = Sample("cited", tuple(getattr(f, metric) for f in cited_feats))
            b = Sample("uncited", tuple(getattr(f, metric) for f in other_feats))
            # same seed + same pool ordering → the same page subset per metric
            if len(a) > target:
                a = balance_downsample(a, target, seed)
            if len(b) > target:
                b = balance_downsample(b, target, seed)
            metrics.append(
                MetricComparison(metric=metric, mw=mann_whitney_u(a, b), ks=ks_two_sample(a, b))
            )
        tables.append(
            WebstructTable(
                country=country,
                provider=provider,
                n_cited=balanced_sizes[0],
                n_other=balanced_sizes[1],
                n_cited_raw=len(cited_feats),
                n_other_raw=len(other_feats),
                excluded_cited=excl_c,
                excluded_other=excl_o,
                seed=seed,
                metrics=tuple(metrics),
            )
        )
    return tables


@dataclass(frozen=True)
class AnswerStats:
    """Per-group answer-level citation and sentence statistics."""

    country: str
    party_id: str
    provider: str
    n_answers: int
    citations_mean: float
    citations_median: float
    citations_std: float
    unique_mean: float
    unique_median: float
    unique_std: float
    sentences_mean: float
    sentences_median: float
    sentences_std: float
    sent_per_cit: float | None  # ratio of means — the headline figure
    sent_per_cit_answer_mean: float | None  # mean of per-answer ratios

    def to_dict(self) -> dict:
        return {
            "country": self.country,
            "party": self.party_id,
            "provider": self.provider,
            "n_answers": self.n_answers,
            "citations": {
                "mean": self.citations_mean,
                "median": self.citations_median,
                "std": self.citations_std,
            },
            "unique": {
                "mean": self.unique_mean,
                "median": self.unique_median,
                "std": self.unique_std,
            },
            "sentences": {
                "mean": self.sentences_mean,
                "median": self.sentences_median,
                "std": self.sentences_std,
            },
            "sent_per_cit": self.sent_per_cit,
            "sent_per_cit_answer_mean": self.sent_per_cit_answer_mean,
        }


def answer_statistics(
    records: list[AnswerRecord],
    party_by_question: Mapping[str, Party],
    language_by_country: Mapping[str, str],
) -> list[AnswerStats]:
    """Mean/median/std of citation and sentence counts per (party, provider).

    Stds are population (ddof=0); Sent./Cit. is the ratio of group means,
    with the mean of per-answer ratios emitted alongside for sensitivity.
    """
    groups: dict[tuple[str, str, str], list[tuple[int, int, int]]] = {}
    for record in records:
        party = _party_for(record, party_by_question)
        language = language_by_country.get(party.country)
        if language is None:
            raise AnalyticsError(f"no language configured for country {party.country}")
        total = len(record.citations)
        unique = len({c.url for c in record.citations})
        sentences = len(split_sentences(record.answer_text, language))
        key = (party.country, party.id, record.provider)
        groups.setdefault(key, []).append((total, unique, sentences))
    out = []
    for key in sorted(groups):
        rows = groups[key]
        totals = np.array([r[0] for r in rows], dtype=float)
        uniques = np.array([r[1] for r in rows], dtype=float)
        sentences = np.array([r[2] for r in rows], dtype=float)
        ratios = [s / t for t, _, s in rows if t > 0]
        cit_mean = float(totals.mean())
        out.append(
            AnswerStats(
                country=key[0],
                party_id=key[1],
                provider=key[2],
                n_answers=len(rows),
                citations_mean=cit_mean,
                citations_median=float(np.median(totals)),
                citations_std=float(totals.std(ddof=0)),
                unique_mean=float(uniques.mean()),
                unique_median=float(np.median(uniques)),
                unique_std=float(uniques.std(ddof=0)),
                sentences_mean=float(sentences.mean()),
                sentences_median=float(np.median(sentences)),
                sentences_std=float(sentences.std(ddof=0)),
                sent_per_cit=(float(sentences.mean()) / cit_mean if cit_mean > 0 else None),
                sent_per_cit_answer_mean=(
                    float(np.mean(ratios)) if ratios else None
                ),
            )
        )
    return out


@dataclass(frozen=True)
class ReportBundle:
    """Everything a report emission needs, with complete provenance."""

    run_id: str
    provenance: dict
    proportions: tuple[ProportionTable, ...]
    band_matrices: tuple[BandMatrix, ...]
    webstruct: tuple[WebstructTable, ...]
    answer_stats: tuple[AnswerStats, ...]

    def to_dict(self) -> dict:
        return {
            "run_id": self.run_id,
            "provenance": dict(self.provenance),
            "proportions": [t.to_dict() for t in self.proportions],
            "band_matrices": [m.to_dict() for m in self.band_matrices],
            "webstruct": [w.to_dict() for w in self.webstruct],
            "answer_stats": [s.to_dict() for s in self.answer_stats],
        }


def build_bundle(
    run_id: str,
    provenance: dict,
    records: list[AnswerRecord],
    classification: RunClassification,
    party_by_question: Mapping[str, Party],
    reflections: list[ReflectionOutcome],
    features_for_url: Mapping[str, StructFeatures | None],
    language_by_country: Mapping[str, str],
    seed: int,
    *,
    allow_pending: bool = False,
) -> ReportBundle:
    """Assemble the full report bundle from classified, reflected run data."""
    countries = sorted(
        {_party_for(r, party_by_question).country for r in records}
    )
    webstruct: list[WebstructTable] = []
    for country in countries:
        webstruct.extend(
            webstruct_analysis(records, party_by_question, features_for_url, country, seed)
        )
    return ReportBundle(
        run_id=run_id,
        provenance=provenance,
        proportions=tuple(
            category_proportions(
                records, classification, party_by_question, allow_pending=allow_pending
            )
        ),
        band_matrices=tuple(
            coverage_bands(
                records,
                classification,
                party_by_question,
                reflections,
                allow_pending=allow_pending,
            )
        ),
        webstruct=tuple(webstruct),
        answer_stats=tuple(
            answer_statistics(records, party_by_question, language_by_country)
        ),
    )
