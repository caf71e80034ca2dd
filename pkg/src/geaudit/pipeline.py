"""Run orchestration: explicit stages over one append-only ledger.

Each stage computes a digest of its inputs (config, upstream stage output,
side files such as the decisions log) and records it in a stage marker
entry together with the seq window of the ledger entries it wrote.
Re-running a stage whose digest is unchanged is a no-op; a changed digest
appends a fresh window, and downstream stages always read the newest one.
That makes every command safe to re-run and makes "what produced this
number" answerable from the ledger alone.

Entry kinds written here:

- ``answer_record``   one collected/replayed answer (AnswerRecord.to_dict)
- ``replay_skip``     a fixture line that did not parse
- ``collect_error``   a live repeat that failed after retries
- ``classification``  full verdict snapshot + pending queue (latest wins)
- ``page_feature``    structural features per normalized page URL
- ``reflection``      one citation's reflection outcome
- ``analysis``        the canonical report document
- ``stage``           stage marker: digest + seq window
"""

from __future__ import annotations

import datetime
import hashlib
import json
from dataclasses import replace
from functools import cached_property
from pathlib import Path

from .adapters import Adapter, adapters_for
from .analytics import ReflectionOutcome, build_bundle
from .classifier import (
    AdjudicationItem,
    Classifier,
    Decision,
    RunClassification,
    VerdictOrigin,
    append_decision,
    read_decisions,
    to_barrier,
)
from .config import AuditConfig, config_digest
from .corpus import (
    Party,
    Question,
    default_parties_path,
    default_templates_path,
    load_manifest,
    load_templates,
    render_questions,
)
from .embeddings import EmbeddingCache, get_backend
from .ge_client import AnswerRecord, Recorder, ask, normalize_url, replay
from .harvest import Harvester, StructFeatures, extract_features
from .judges import (
    HTTPJudge,
    Judge,
    JudgeConfig,
    StaticTableJudge,
    default_prompt_path,
    load_prompt_template,
)
from .reflection import detect_language, reflect_citation, split_sentences
from .report import emit_from_document, report_document
from .store import Run, RunStore
from .whois import WhoisClient


class PipelineError(RuntimeError):
    """A stage refused to run or to complete; carries pending hosts if any."""

    def __init__(self, message: str, *, pending_hosts: tuple[str, ...] = ()):
        super().__init__(message)
        self.pending_hosts = tuple(pending_hosts)


def _digest(obj) -> str:
    canonical = json.dumps(obj, ensure_ascii=False, sort_keys=True)
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def _file_digest(path: str | Path) -> str:
    try:
        return hashlib.sha256(Path(path).read_bytes()).hexdigest()
    except FileNotFoundError:
        return ""


def _now_iso() -> str:
    return (
        datetime.datetime.now(datetime.timezone.utc)
        .replace(microsecond=0)
        .isoformat()
        .replace("+00:00", "Z")
    )


class Pipeline:
    """All stages of one audit run, bound to a config and a store."""

    def __init__(
        self,
        config: AuditConfig,
        store: RunStore,
        *,
        adapters: dict[str, Adapter] | None = None,
        judges: tuple[Judge, Judge] | None = None,
    ):
        self.config = config
        self.store = store
        self._adapters_override = adapters
        self._judges_override = judges
        self._run: Run | None = None

    # ------------------------------------------------------------- plumbing

    @property
    def config_digest(self) -> str:
        return config_digest(self.config)

    def _timestamp(self) -> str:
        return self.config.timestamp or _now_iso()

    @property
    def run(self) -> Run:
        if self._run is None:
            try:
                self._run = self.store.open_run(self.config.run_id)
            except Exception as exc:
                raise PipelineError(
                    f"run {self.config.run_id!r} not initialized (run init first): {exc}"
                ) from exc
        return self._run

    def init(self) -> Run:
        """Create the run ledger; refuses to clobber an existing run."""
        self._run = self.store.create_run(
            self.config.run_id, self.config_digest, self._timestamp()
        )
        return self._run

    @cached_property
    def templates(self):
        return load_templates(self.config.templates_path or default_templates_path())

    @cached_property
    def manifest_parties(self) -> list[Party]:
        return load_manifest(self.config.parties_path or default_parties_path())

    @cached_property
    def scope_parties(self) -> list[Party]:
        """Every manifest party in the configured countries.

        This is the classifier's party universe: opponent detection must see
        rivals even when the question corpus is narrowed to a party subset.
        """
        return [p for p in self.manifest_parties if p.country in self.config.countries]

    @cached_property
    def questions(self) -> list[Question]:
        return render_questions(self.templates, self.manifest_parties, self.config.study_config())

    @cached_property
    def party_by_question(self) -> dict[str, Party]:
        by_id = {p.id: p for p in self.manifest_parties}
        return {q.id: by_id[q.party_id] for q in self.questions}

    def _adapters(self) -> dict[str, Adapter]:
        if self._adapters_override is not None:
            return self._adapters_override
        return adapters_for(list(self.config.providers))

    def _judges(self) -> tuple[Judge, Judge]:
        if self._judges_override is not None:
            return self._judges_override
        built: list[Judge] = []
        for spec in self.config.judges:
            if spec.kind == "static":
                built.append(StaticTableJudge.from_file(spec.judge_id, spec.table_path))
            else:
                built.append(
                    HTTPJudge(
                        JudgeConfig(
                            judge_id=spec.judge_id,
                            endpoint=spec.endpoint,
                            model=spec.model,
                            credential_env=spec.credential_env,
                            timeout=spec.timeout,
                        )
                    )
                )
        return (built[0], built[1])

    def _classifier(self) -> Classifier:
        prompt = load_prompt_template(
            default_prompt_path(literal_platform_labels=self.config.judge_prompt == "literal")
        )
        whois_client = WhoisClient(
            cache_dir=self.store.cache_dir("whois"), mode=self.config.whois_mode
        )
        now = self.config.timestamp
        return Classifier(
            self.scope_parties,
            self._judges(),
            whois_client,
            prompt,
            **({"now_iso": lambda: now} if now else {}),
        )

    def _latest_stage(self, name: str) -> dict | None:
        latest = None
        for entry in self.run.scan("stage"):
            if entry.payload.get("stage") == name:
                latest = entry.payload
        return latest

    def _require_stage(self, name: str) -> dict:
        stage = self._latest_stage(name)
        if stage is None:
            raise PipelineError(f"stage {name!r} has not run for {self.config.run_id!r}")
        return stage

    def _window(self, kind: str, stage: dict) -> list[dict]:
        first, last = stage.get("first_seq"), stage.get("last_seq")
        if first is None:
            return []
        return [
            e.payload for e in self.run.scan(kind) if first <= e.seq <= last
        ]

    def records(self) -> list[AnswerRecord]:
        stage = self._require_stage("collect")
        return [AnswerRecord.from_dict(p) for p in self._window("answer_record", stage)]

    # --------------------------------------------------------------- stages

    def collect(self, *, force: bool = False) -> dict:
        """Gather answers: replay fixtures when configured, else ask live."""
        mode = "replay" if self.config.fixtures else "live"
        digest = _digest(
            {
                "config": self.config_digest,
                "mode": mode,
                "corpus": [
                    _file_digest(self.config.templates_path or default_templates_path()),
                    _file_digest(self.config.parties_path or default_parties_path()),
                ],
                "fixtures": [_file_digest(f) for f in self.config.fixtures],
            }
        )
        stage = self._latest_stage("collect")
        if stage is not None and stage["input_digest"] == digest and not force:
            return stage
        record_count = skip_count = 0
        batch: list[tuple[str, dict]] = []

        if mode == "replay":
            adapters = self._adapters()
            for path in self.config.fixtures:
                records, skips = replay(path, adapters)
                for record in records:
                    batch.append(("answer_record", record.to_dict()))
                    record_count += 1
                for reason in skips:
                    batch.append(("replay_skip", {"path": str(path), "reason": reason}))
                    skip_count += 1
        else:
            adapters = self._adapters()
            raw_dir = self.store.runs_dir / self.config.run_id / "raw"
            for name in sorted(adapters):
                recorder = Recorder(raw_dir / f"{name}.jsonl")
                try:
                    for question in self.questions:
                        result = ask(adapters[name], question, self.config.repeats, recorder)
                        for record in result.records:
                            batch.append(("answer_record", record.to_dict()))
                            record_count += 1
                        for error in result.errors:
                            batch.append(
                                (
                                    "collect_error",
                                    {
                                        "provider": name,
                                        "question_id": question.id,
                                        "repeat_index": error.repeat_index,
                                        "kind": error.kind,
                                        "message": error.message,
                                    },
                                )
                            )
                            skip_count += 1
                finally:
                    recorder.close()
        # one durable batch; the stage marker below is what makes it visible
        first = last = None
        if batch:
            seqs = self.run.append_batch(batch)
            first, last = seqs[0], seqs[-1]
        payload = {
            "stage": "collect",
            "input_digest": digest,
            "mode": mode,
            "first_seq": first,
            "last_seq": last,
            "record_count": record_count,
            "skip_count": skip_count,
        }
        self.run.append("stage", payload)
        return payload

    def _latest_classification(self) -> dict | None:
        entry = self.run.last_entry("classification")
        return entry.payload if entry is not None else None

    def classify(self, *, allow_pending: bool = False, force: bool = False) -> RunClassification:
        """Classify every cited host; persist the snapshot before failing.

        The snapshot lands in the ledger even when hosts remain pending, so
        the adjudication queue is always readable; only afterwards does the
        stage raise (unless allow_pending).
        """
        collect_stage = self._require_stage("collect")
        decisions_digest = _file_digest(self.config.decisions_file)
        base = {
            "config": self.config_digest,
            "records": [collect_stage["input_digest"], collect_stage["first_seq"],
                        collect_stage["last_seq"]],
            "judges": [
                _file_digest(spec.table_path) if spec.kind == "static" else spec.endpoint
                for spec in self.config.judges
            ],
        }
        base_digest = _digest(base)
        digest = _digest({**base, "decisions": decisions_digest})
        latest = self._latest_classification()
        if latest is not None and latest["input_digest"] == digest and not force:
            classification = RunClassification.from_dict(latest)
        else:
            classifier = self._classifier()
            if latest is not None and latest.get("base_digest") == base_digest:
                # same records + judge config: reuse judge/human outcomes so
                # judges are consulted at most once per host per run
                classifier.seed_cache(RunClassification.from_dict(latest))
            records = self.records()
            classifier.classify_run(records, self.party_by_question)
            classifier.apply_decisions(read_decisions(self.config.decisions_file))
            classification = classifier.classify_run(records, self.party_by_question)
            payload = {
                "input_digest": digest,
                "base_digest": base_digest,
                "decisions_digest": decisions_digest,
                **classification.to_dict(),
            }
            self.run.append("classification", payload)
        if classification.pending and not allow_pending:
            hosts = sorted(classification.pending)
            raise PipelineError(
                f"unresolved adjudications for {len(hosts)} host(s): {', '.join(hosts)}",
                pending_hosts=tuple(hosts),
            )
        return classification

    def pending_queue(self) -> list[AdjudicationItem]:
        """The adjudication queue from the latest classification snapshot."""
        latest = self._latest_classification()
        if latest is None:
            raise PipelineError(f"stage 'classify' has not run for {self.config.run_id!r}")
        classification = RunClassification.from_dict(latest)
        return [classification.pending[h] for h in sorted(classification.pending)]

    def record_decision(self, decision: Decision) -> RunClassification:
        """Validate one human decision, append it, and reclassify.

        Validation runs against the latest snapshot before the decisions
        file is touched, so a conflicting decision never lands on disk.
        """
        latest = self._latest_classification()
        if latest is None:
            raise PipelineError(f"stage 'classify' has not run for {self.config.run_id!r}")
        snapshot = RunClassification.from_dict(latest)
        for verdict in snapshot.outcomes.values():
            if (
                verdict.host == decision.host
                and verdict.origin is VerdictOrigin.HUMAN
                and verdict.category.value == decision.category
            ):
                return snapshot  # identical re-post: keep the file clean
        if not decision.timestamp:
            decision = replace(decision, timestamp=self._timestamp())
        probe = self._classifier()
        probe.seed_cache(snapshot)
        probe.apply_decisions([decision])  # raises ClassifierError on conflict
        append_decision(self.config.decisions_file, decision)
        return self.classify(allow_pending=True)

    def reflect(self, *, force: bool = False) -> dict:
        """Harvest cited and visited pages; score citation reflection."""
        collect_stage = self._require_stage("collect")
        digest = _digest(
            {
                "config": self.config_digest,
                "records": [collect_stage["input_digest"], collect_stage["first_seq"],
                            collect_stage["last_seq"]],
                "backend": self.config.embedding_backend,
                "offline": self.config.pages_offline,
            }
        )
        stage = self._latest_stage("reflect")
        if stage is not None and stage["input_digest"] == digest and not force:
            return stage
        records = self.records()
        to_fetch: dict[str, str] = {}  # normalized -> first-seen original URL
        for record in records:
            for url in [c.url for c in record.citations] + list(record.visited_sources or ()):
                to_fetch.setdefault(normalize_url(url), url)
        harvester = Harvester(
            cache_dir=self.store.cache_dir("pages"), offline=self.config.pages_offline
        )
        snapshots = harvester.fetch_many([to_fetch[k] for k in sorted(to_fetch)])
        batch: list[tuple[str, dict]] = []

        def _append(kind: str, payload: dict) -> None:
            batch.append((kind, payload))

        for key in sorted(to_fetch):
            snapshot = snapshots[to_fetch[key]]
            features = None
            if snapshot.ok and snapshot.html_bytes:
                features = extract_features(snapshot.html_bytes).to_dict()
            _append(
                "page_feature",
                {
                    "url": key,
                    "source_url": to_fetch[key],
                    "status": snapshot.status,
                    "features": features,
                },
            )
        backend = self._backend()
        cache = EmbeddingCache(self.store.cache_dir("embeddings"))
        for record in records:
            party = self.party_by_question[record.question_id]
            language = self.config.language_by_country[party.country]
            answer_sentences = split_sentences(record.answer_text, language)
            for index, citation in enumerate(record.citations):
                snapshot = snapshots[to_fetch[normalize_url(citation.url)]]
                outcome = None
                if snapshot.ok and snapshot.extracted_text.strip():
                    page_language = detect_language(snapshot.extracted_text)
                    citation_sentences = split_sentences(snapshot.extracted_text, page_language)
                    reflection = reflect_citation(
                        citation.url, answer_sentences, citation_sentences, backend, cache
                    )
                    if reflection is not None:
                        outcome = ReflectionOutcome(
                            question_id=record.question_id,
                            repeat_index=record.repeat_index,
                            provider=record.provider,
                            citation_index=index,
                            url=citation.url,
                            sim_max=reflection.score,
                            band=reflection.band.value,
                            answer_sentence_index=reflection.answer_index,
                            citation_sentence_index=reflection.citation_index,
                            cross_language=reflection.cross_language,
                        )
                if outcome is None:
                    outcome = ReflectionOutcome(
                        question_id=record.question_id,
                        repeat_index=record.repeat_index,
                        provider=record.provider,
                        citation_index=index,
                        url=citation.url,
                        sim_max=None,
                        band=None,
                    )
                _append("reflection", outcome.to_dict())
        # one durable batch; the stage marker below is what makes it visible
        first = last = None
        if batch:
            seqs = self.run.append_batch(batch)
            first, last = seqs[0], seqs[-1]
        payload = {
            "stage": "reflect",
            "input_digest": digest,
            "backend_id": backend.backend_id,
            "first_seq": first,
            "last_seq": last,
            "page_count": len(to_fetch),
        }
        self.run.append("stage", payload)
        return payload

    def _backend(self):
        name = self.config.embedding_backend
        if name.startswith("sbert:"):
            return get_backend("sbert", model=name.split(":", 1)[1])
        if name == "sbert":
            return get_backend("sbert")
        return get_backend(name)

    def analyze(self, *, allow_pending: bool = False, force: bool = False) -> dict:
        """Aggregate the ledger into the canonical report document."""
        collect_stage = self._require_stage("collect")
        latest_classification = self._latest_classification()
        if latest_classification is None:
            raise PipelineError(f"stage 'classify' has not run for {self.config.run_id!r}")
        reflect_stage = self._require_stage("reflect")
        digest = _digest(
            {
                "config": self.config_digest,
                "collect": collect_stage["input_digest"],
                "classification": latest_classification["input_digest"],
                "reflect": reflect_stage["input_digest"],
                "allow_pending": allow_pending,
            }
        )
        latest = self.run.last_entry("analysis")
        if latest is not None and latest.payload["input_digest"] == digest and not force:
            return latest.payload["document"]
        classification = RunClassification.from_dict(latest_classification)
        if classification.pending and not allow_pending:
            hosts = sorted(classification.pending)
            raise PipelineError(
                f"unresolved adjudications for {len(hosts)} host(s): {', '.join(hosts)}",
                pending_hosts=tuple(hosts),
            )
        reflections = [
            ReflectionOutcome.from_dict(p) for p in self._window("reflection", reflect_stage)
        ]
        features_for_url: dict[str, StructFeatures | None] = {}
        for payload in self._window("page_feature", reflect_stage):
            raw = payload["features"]
            features_for_url[payload["url"]] = (
                StructFeatures(
                    link_count=raw["link_count"],
                    ul_count=raw["ul_count"],
                    heading_count=raw["heading_count"],
                    text_length=raw["text_length"],
                    text_density=raw["text_density"],
                )
                if raw is not None
                else None
            )
        provenance = {
            "config_digest": self.config_digest,
            "embedding_backend": reflect_stage.get("backend_id", self.config.embedding_backend),
            "seed": self.config.seed,
            "decisions_digest": latest_classification["decisions_digest"],
        }
        bundle = build_bundle(
            run_id=self.config.run_id,
            provenance=provenance,
            records=self.records(),
            classification=classification,
            party_by_question=self.party_by_question,
            reflections=reflections,
            features_for_url=features_for_url,
            language_by_country=self.config.language_by_country,
            seed=self.config.seed,
            allow_pending=allow_pending,
        )
        document = report_document(bundle)
        self.run.append("analysis", {"input_digest": digest, "document": document})
        return document

    def analysis_document(self) -> dict:
        """The latest stored report document."""
        latest = self.run.last_entry("analysis")
        if latest is None:
            raise PipelineError(f"stage 'analyze' has not run for {self.config.run_id!r}")
        return latest.payload["document"]

    def report(self, out_dir: str | Path | None = None) -> list[Path]:
        """Write report files from the stored document; returns the paths."""
        document = self.analysis_document()
        out = Path(out_dir) if out_dir else self.store.runs_dir / self.config.run_id / "report"
        return emit_from_document(document, out, tuple(self.config.report_formats))

    def citation_details(self) -> list[dict]:
        """Per-citation-occurrence drill-down rows, one per cited URL.

        Joins the latest collect window, classification snapshot, and
        reflection window so a review surface can answer "which citations
        sit behind this number" without recomputing anything.
        """
        latest = self._latest_classification()
        if latest is None:
            raise PipelineError(f"stage 'classify' has not run for {self.config.run_id!r}")
        classification = RunClassification.from_dict(latest)
        reflections: dict[tuple, dict] = {}
        reflect_stage = self._latest_stage("reflect")
        if reflect_stage is not None:
            for payload in self._window("reflection", reflect_stage):
                key = (
                    payload["question_id"],
                    payload["repeat_index"],
                    payload["provider"],
                    payload["citation_index"],
                )
                reflections[key] = payload
        rows = []
        for record in self.records():
            party = self.party_by_question[record.question_id]
            for index, citation in enumerate(record.citations):
                verdict = classification.verdict_for(citation.host, party.id)
                row = {
                    "question_id": record.question_id,
                    "repeat_index": record.repeat_index,
                    "provider": record.provider,
                    "party": party.id,
                    "country": party.country,
                    "citation_index": index,
                    "url": citation.url,
                    "host": citation.host,
                    "status": "classified" if verdict is not None else "pending",
                    "category": verdict.category.value if verdict else None,
                    "origin": verdict.origin.value if verdict else None,
                    "barrier": to_barrier(verdict).value if verdict else None,
                    "sim_max": None,
                    "band": None,
                    "answer_sentence_index": None,
                    "citation_sentence_index": None,
                    "cross_language": None,
                }
                reflection = reflections.get(
                    (record.question_id, record.repeat_index, record.provider, index)
                )
                if reflection is not None:
                    for field in (
                        "sim_max",
                        "band",
                        "answer_sentence_index",
                        "citation_sentence_index",
                        "cross_language",
                    ):
                        row[field] = reflection[field]
                rows.append(row)
        return rows
