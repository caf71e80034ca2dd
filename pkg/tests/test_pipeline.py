"""End-to-end stage orchestration over a small, fully offline world.

The world: two Japanese parties (alpha, beta), two templates, two
providers (one exposes visited sources, one does not), four secondary
hosts (one judge disagreement that needs a human decision), and one dead
page.  Everything — fixtures, judge tables, page snapshots — lives on
disk, so runs are deterministic end to end.
"""

import base64
import json

import jsonschema
import pytest
import yaml

from geaudit.classifier import ClassifierError, Decision
from geaudit.config import load_config
from geaudit.adapters import ProviderConfig
from geaudit.ge_client import RawExchange, Recorder, normalize_url
from geaudit.harvest import PageCache, PageSnapshot
from geaudit.pipeline import Pipeline, PipelineError
from geaudit.report import load_schema
from geaudit.store import RunStore, StoreError

TS = "2024-08-17T00:00:00Z"

VERBATIM = "アルファ党は教育政策を最優先すると表明しました。"

PAGES = {
    "https://alpha.example/policy": f"<p>アルファ党の政策綱領はこちらです。公約の全文を掲載しています。</p><a href='/a'>綱領</a><h2>政策</h2>",
    "https://news.example/a1": f"<p>{VERBATIM}国会での審議が続いています。</p><a href='/b'>続報</a><ul><li>教育</li></ul><h1>報道</h1>",
    "https://beta.example/about": "<p>ベータ党の紹介ページです。地方組織の一覧を掲載しています。</p><h1>概要</h1>",
    "https://univ.example/study": "<p>本研究は政党の政策変遷を分析したものです。方法論は付録に記載しています。</p><h1>研究</h1>",
    "https://blog.example/post": "<p>今日の政治ニュースまとめです。個人的な感想を書いています。</p><a href='/c'>前回</a><h2>日記</h2>",
    "https://portal.example/hub": "<p>政治情報のポータルサイトです。各党へのリンクを集めています。</p><a href='/d'>一覧</a><a href='/e'>党</a><h1>玄関</h1>",
}
DEAD_URL = "https://dead.example/missing"

TEMPLATES_YAML = """\
version: 1
templates:
  - id: t01
    kind: policy
    text:
      en: "What does {PARTY} prioritize on education?"
      ja: "{PARTY}は教育について何を優先していますか？"
  - id: t02
    kind: ideology
    text:
      en: "Where does {PARTY} sit ideologically?"
      ja: "{PARTY}の思想的な立ち位置はどこですか？"
"""

PARTIES_YAML = """\
version: 1
parties:
  - id: alpha
    country: jp
    names: {ja: "アルファ党", en: "Alpha Party"}
    aliases: ["Alpha"]
    domains: [alpha.example]
  - id: beta
    country: jp
    names: {ja: "ベータ党", en: "Beta Party"}
    aliases: ["Beta"]
    domains: [beta.example]
"""

TABLE_A = {
    "news.example": "media",
    "univ.example": "academia",
    "blog.example": "platform",
    "dead.example": "media",
}
TABLE_B = dict(TABLE_A, **{"blog.example": "media"})  # the one disagreement

# question_id -> (answer_text, [citation urls], visited or None)
PROV_A_ANSWERS = {
    "t01-alpha": (
        VERBATIM + "詳細は公式サイトで公開されています。",
        ["https://alpha.example/policy", "https://news.example/a1"],
        ["https://alpha.example/policy", "https://news.example/a1", "https://portal.example/hub"],
    ),
    "t01-beta": (
        "ベータ党は教育無償化を掲げています。",
        ["https://beta.example/about"],
        ["https://beta.example/about"],
    ),
    "t02-alpha": (
        "アルファ党は中道的な立場を取っています。研究でも指摘されています。",
        ["https://univ.example/study", "https://blog.example/post"],
        ["https://univ.example/study", "https://blog.example/post", "https://portal.example/hub"],
    ),
    "t02-beta": (
        "ベータ党は対立政党と比較されることが多いです。",
        ["https://alpha.example/policy"],
        ["https://alpha.example/policy"],
    ),
}
PROV_B_ANSWERS = {
    "t01-alpha": ("教育政策が審議されています。", ["https://news.example/a1"], None),
    "t01-beta": ("ベータ党は新しい方針を検討しています。", [DEAD_URL], None),
    "t02-alpha": ("アルファ党の綱領を参照してください。", ["https://alpha.example/policy"], None),
    "t02-beta": ("ベータ党の概要はこちらです。", ["https://beta.example/about"], None),
}

N_RECORDS = len(PROV_A_ANSWERS) + len(PROV_B_ANSWERS)
N_CITATIONS = sum(len(c) for _, c, _ in PROV_A_ANSWERS.values()) + sum(
    len(c) for _, c, _ in PROV_B_ANSWERS.values()
)


def _annotated_response(answer: str, urls: list[str], visited) -> dict:
    doc = {"answer_text": answer, "citations": [{"url": u} for u in urls]}
    if visited is not None:
        doc["visited_sources"] = visited
    return doc


def _answer_level_response(answer: str, urls: list[str]) -> dict:
    return {"output": {"text": answer}, "sources": urls}


def _write_fixture(path, provider: str, answers: dict) -> None:
    with Recorder(path) as recorder:
        for question_id, (answer, urls, visited) in answers.items():
            if provider == "prov-a":
                doc = _annotated_response(answer, urls, visited)
            else:
                doc = _answer_level_response(answer, urls)
            recorder.record_raw(
                question_id,
                0,
                RawExchange(
                    provider=provider,
                    request={"question_id": question_id},
                    response_bytes=json.dumps(doc, ensure_ascii=False).encode("utf-8"),
                    timestamp=TS,
                ),
            )


def _world(tmp_path):
    """Lay out config, corpus, fixtures, judge tables, and page cache."""
    (tmp_path / "corpus").mkdir()
    (tmp_path / "corpus/templates.yaml").write_text(TEMPLATES_YAML, encoding="utf-8")
    (tmp_path / "corpus/parties.yaml").write_text(PARTIES_YAML, encoding="utf-8")
    (tmp_path / "judges").mkdir()
    (tmp_path / "judges/a.json").write_text(json.dumps(TABLE_A), encoding="utf-8")
    (tmp_path / "judges/b.json").write_text(json.dumps(TABLE_B), encoding="utf-8")
    _write_fixture(tmp_path / "raw/prov-a.jsonl", "prov-a", PROV_A_ANSWERS)
    _write_fixture(tmp_path / "raw/prov-b.jsonl", "prov-b", PROV_B_ANSWERS)
    config = {
        "run_id": "pipe-test",
        "countries": ["jp"],
        "language_by_country": {"jp": "ja"},
        "repeats": 1,
        "seed": 42,
        "embedding_backend": "hash",
        "judge_prompt": "default",
        "whois_mode": "off",
        "pages_offline": True,
        "timestamp": TS,
        "providers": [
            {"name": "prov-a", "style": "annotated-json"},
            {"name": "prov-b", "style": "answer-level"},
        ],
        "judges": [
            {"judge_id": "judge-a", "kind": "static", "table_path": "judges/a.json"},
            {"judge_id": "judge-b", "kind": "static", "table_path": "judges/b.json"},
        ],
        "fixtures": ["raw/prov-a.jsonl", "raw/prov-b.jsonl"],
        "templates_path": "corpus/templates.yaml",
        "parties_path": "corpus/parties.yaml",
        "decisions_file": "decisions.jsonl",
    }
    config_path = tmp_path / "audit.yaml"
    config_path.write_text(yaml.safe_dump(config, allow_unicode=True), encoding="utf-8")
    store = RunStore(tmp_path / "store")
    cache = PageCache(store.cache_dir("pages"))
    for url, html in PAGES.items():
        from geaudit.harvest import extract_text

        cache.put(
            PageSnapshot(
                url=url,
                status="ok",
                http_code=200,
                html_bytes=html.encode("utf-8"),
                extracted_text=extract_text(html),
                fetched_at=1704067200.0,
            )
        )
    cache.put(
        PageSnapshot(
            url=DEAD_URL,
            status="http_error",
            http_code=404,
            html_bytes=b"",
            extracted_text="",
            fetched_at=1704067200.0,
        )
    )
    return load_config(config_path), store, tmp_path


@pytest.fixture()
def world(tmp_path):
    return _world(tmp_path)


def _decide_blog(pipeline) -> None:
    pipeline.record_decision(
        Decision(host="blog.example", category="platform", adjudicator="op", timestamp=TS)
    )


class TestInitAndCollect:
    def test_init_creates_run(self, world):
        config, store, _ = world
        pipeline = Pipeline(config, store)
        run = pipeline.init()
        assert run.id.run_id == "pipe-test"
        assert run.id.created_at == TS
        assert [r.run_id for r in store.list_runs()] == ["pipe-test"]

    def test_init_refuses_existing(self, world):
        config, store, _ = world
        Pipeline(config, store).init()
        with pytest.raises(StoreError, match="exists"):
            Pipeline(config, store).init()

    def test_stage_before_init(self, world):
        config, store, _ = world
        with pytest.raises(PipelineError, match="not initialized"):
            Pipeline(config, store).collect()

    def test_replay_collect_window(self, world):
        config, store, _ = world
        pipeline = Pipeline(config, store)
        pipeline.init()
        stage = pipeline.collect()
        assert stage["mode"] == "replay"
        assert stage["record_count"] == N_RECORDS
        assert stage["skip_count"] == 0
        records = pipeline.records()
        assert len(records) == N_RECORDS
        assert records[0].question_id == "t01-alpha"
        assert records[0].provider == "prov-a"
        assert records[0].visited_sources is not None
        assert records[-1].provider == "prov-b"
        assert records[-1].visited_sources is None

    def test_collect_idempotent(self, world):
        config, store, _ = world
        pipeline = Pipeline(config, store)
        pipeline.init()
        first = pipeline.collect()
        second = pipeline.collect()
        assert first == second
        assert sum(1 for _ in pipeline.run.scan("answer_record")) == N_RECORDS

    def test_collect_reruns_on_fixture_change(self, world):
        config, store, root = world
        pipeline = Pipeline(config, store)
        pipeline.init()
        pipeline.collect()
        with Recorder(root / "raw/prov-a.jsonl") as recorder:
            recorder.record_raw(
                "t01-alpha",
                1,
                RawExchange(
                    provider="prov-a",
                    request={},
                    response_bytes=json.dumps(
                        _annotated_response("追加の回答です。", ["https://news.example/a1"], None)
                    ).encode("utf-8"),
                    timestamp=TS,
                ),
            )
        stage = pipeline.collect()
        assert stage["record_count"] == N_RECORDS + 1
        # the new window replaces the old one for readers...
        assert len(pipeline.records()) == N_RECORDS + 1
        # ...but the ledger keeps both (append-only)
        assert sum(1 for _ in pipeline.run.scan("answer_record")) == 2 * N_RECORDS + 1

    def test_live_collect_records_and_replays(self, world):
        config, store, root = world

        class _StubAdapter:
            def __init__(self, name: str, answers: dict):
                self.config = ProviderConfig(name=name, style="annotated-json")
                self._answers = answers

            def ask_raw(self, question):
                answer, urls, visited = self._answers[question.id]
                doc = _annotated_response(answer, urls, visited)
                return RawExchange(
                    provider=self.config.name,
                    request={"question_id": question.id},
                    response_bytes=json.dumps(doc, ensure_ascii=False).encode("utf-8"),
                    timestamp=TS,
                )

            def parse(self, raw):
                doc = json.loads(raw.response_bytes)
                citations = [(c["url"], ()) for c in doc["citations"]]
                return doc["answer_text"], citations, doc.get("visited_sources")

        from dataclasses import replace

        live_config = replace(config, fixtures=())
        stub = _StubAdapter("prov-a", PROV_A_ANSWERS)
        pipeline = Pipeline(live_config, store, adapters={"prov-a": stub})
        pipeline.init()
        stage = pipeline.collect()
        assert stage["mode"] == "live"
        assert stage["record_count"] == len(PROV_A_ANSWERS)  # 4 questions x 1 repeat
        raw_path = store.runs_dir / "pipe-test" / "raw" / "prov-a.jsonl"
        assert raw_path.exists()
        lines = raw_path.read_text(encoding="utf-8").splitlines()
        assert json.loads(lines[0])["kind"] == "header"
        assert len(lines) == 1 + len(PROV_A_ANSWERS)
        # the recording replays to the same records via the real adapter
        from geaudit.ge_client import replay
        from geaudit.adapters import adapters_for

        replayed, skipped = replay(raw_path, adapters_for([ProviderConfig("prov-a", "annotated-json")]))
        assert skipped == []
        assert [r.to_dict() for r in replayed] == [r.to_dict() for r in pipeline.records()]


class TestClassifyStage:
    def test_pending_raises_but_snapshot_persists(self, world):
        config, store, _ = world
        pipeline = Pipeline(config, store)
        pipeline.init()
        pipeline.collect()
        with pytest.raises(PipelineError, match="blog.example") as excinfo:
            pipeline.classify()
        assert excinfo.value.pending_hosts == ("blog.example",)
        # the queue is readable from the ledger even though the stage failed
        queue = pipeline.pending_queue()
        assert [item.host for item in queue] == ["blog.example"]
        votes = dict(queue[0].votes)
        assert votes == {"judge-a": "platform", "judge-b": "media"}

    def test_allow_pending_returns_incomplete(self, world):
        config, store, _ = world
        pipeline = Pipeline(config, store)
        pipeline.init()
        pipeline.collect()
        classification = pipeline.classify(allow_pending=True)
        assert not classification.complete
        assert set(classification.pending) == {"blog.example"}
        # manifest + consensus outcomes are all present
        assert classification.verdict_for("alpha.example", "alpha").origin.value == "manifest_primary"
        assert classification.verdict_for("alpha.example", "beta").origin.value == "manifest_opponent"
        assert classification.verdict_for("news.example", "alpha").category.value == "media"
        assert classification.verdict_for("dead.example", "beta").category.value == "media"

    def test_decision_resolves_and_reclassifies(self, world):
        config, store, _ = world
        pipeline = Pipeline(config, store)
        pipeline.init()
        pipeline.collect()
        pipeline.classify(allow_pending=True)
        _decide_blog(pipeline)
        classification = pipeline.classify()  # no longer raises
        assert classification.complete
        verdict = classification.verdict_for("blog.example", "alpha")
        assert verdict.category.value == "platform"
        assert verdict.origin.value == "human"
        assert dict(verdict.judge_votes) == {"judge-a": "platform", "judge-b": "media"}

    def test_reclassification_never_recalls_judges(self, world):
        from geaudit.judges import StaticTableJudge

        config, store, root = world
        pipeline = Pipeline(config, store)
        pipeline.init()
        pipeline.collect()
        pipeline.classify(allow_pending=True)
        _decide_blog(pipeline)
        # fresh pipeline, fresh instrumented judges: the seeded snapshot must
        # satisfy every secondary host without a single judge call
        judges = (
            StaticTableJudge("judge-a", TABLE_A),
            StaticTableJudge("judge-b", TABLE_B),
        )
        fresh = Pipeline(config, store, judges=judges)
        classification = fresh.classify()
        assert classification.complete
        assert judges[0].calls == 0 and judges[1].calls == 0

    def test_classify_idempotent_snapshot(self, world):
        config, store, _ = world
        pipeline = Pipeline(config, store)
        pipeline.init()
        pipeline.collect()
        pipeline.classify(allow_pending=True)
        pipeline.classify(allow_pending=True)
        snapshots = list(pipeline.run.scan("classification"))
        assert len(snapshots) == 1  # unchanged inputs append nothing

    def test_conflicting_decision_rejected_before_append(self, world):
        config, store, root = world
        pipeline = Pipeline(config, store)
        pipeline.init()
        pipeline.collect()
        pipeline.classify(allow_pending=True)
        with pytest.raises(ClassifierError, match="conflicts"):
            pipeline.record_decision(
                Decision(host="news.example", category="platform", adjudicator="op")
            )
        assert not (root / "decisions.jsonl").exists()  # nothing landed on disk

    def test_classify_requires_collect(self, world):
        config, store, _ = world
        pipeline = Pipeline(config, store)
        pipeline.init()
        with pytest.raises(PipelineError, match="collect"):
            pipeline.classify()


class TestReflectStage:
    def test_reflection_outcomes(self, world):
        config, store, _ = world
        pipeline = Pipeline(config, store)
        pipeline.init()
        pipeline.collect()
        stage = pipeline.reflect()
        assert stage["backend_id"] == "hash-v1-d384"
        assert stage["page_count"] == len(PAGES) + 1  # dead page included
        features = {p["url"]: p for p in pipeline._window("page_feature", stage)}
        assert features[normalize_url(DEAD_URL)]["features"] is None
        assert features[normalize_url("https://news.example/a1")]["features"]["link_count"] == 1
        reflections = pipeline._window("reflection", stage)
        assert len(reflections) == N_CITATIONS
        by_key = {
            (r["question_id"], r["provider"], r["citation_index"]): r for r in reflections
        }
        dead = by_key[("t01-beta", "prov-b", 0)]
        assert dead["sim_max"] is None and dead["band"] is None
        verbatim = by_key[("t01-alpha", "prov-a", 1)]  # news.example carries the sentence
        assert verbatim["sim_max"] > 0.99
        assert verbatim["band"] == "high"
        for r in reflections:
            if r["sim_max"] is not None:
                assert r["band"] in ("low", "mid", "high")

    def test_reflect_idempotent(self, world):
        config, store, _ = world
        pipeline = Pipeline(config, store)
        pipeline.init()
        pipeline.collect()
        first = pipeline.reflect()
        second = pipeline.reflect()
        assert first == second
        assert sum(1 for _ in pipeline.run.scan("reflection")) == N_CITATIONS


class TestAnalyzeAndReport:
    def _run_all(self, config, store):
        pipeline = Pipeline(config, store)
        pipeline.init()
        pipeline.collect()
        pipeline.classify(allow_pending=True)
        _decide_blog(pipeline)
        pipeline.classify()
        pipeline.reflect()
        return pipeline

    def test_analyze_blocks_on_pending(self, world):
        config, store, _ = world
        pipeline = Pipeline(config, store)
        pipeline.init()
        pipeline.collect()
        pipeline.classify(allow_pending=True)
        pipeline.reflect()
        with pytest.raises(PipelineError, match="blog.example"):
            pipeline.analyze()
        document = pipeline.analyze(allow_pending=True)
        tables = [
            t
            for t in document["proportions"]
            if t["party"] == "alpha" and t["provider"] == "prov-a"
        ]
        assert tables[0]["excluded_pending"] == 1  # blog.example citation

    def test_analyze_document_valid_and_idempotent(self, world):
        config, store, _ = world
        pipeline = self._run_all(config, store)
        document = pipeline.analyze()
        jsonschema.validate(document, load_schema())
        assert document["run_id"] == "pipe-test"
        assert document["provenance"]["embedding_backend"] == "hash-v1-d384"
        assert document["provenance"]["seed"] == 42
        assert document["provenance"]["decisions_digest"] != ""
        again = pipeline.analyze()
        assert again == document
        assert sum(1 for _ in pipeline.run.scan("analysis")) == 1

    def test_analysis_numbers(self, world):
        config, store, _ = world
        pipeline = self._run_all(config, store)
        document = pipeline.analyze()
        by_key = {
            (t["party"], t["provider"]): t for t in document["proportions"]
        }
        alpha_a = by_key[("alpha", "prov-a")]
        # t01-alpha cites alpha.example (primary) + news.example (medium);
        # t02-alpha cites univ.example (high) + blog.example (low, human)
        assert alpha_a["total"] == 4
        assert alpha_a["counts"] == {
            "primary": 1, "opponent": 0, "low": 1, "medium": 1, "high": 1,
        }
        beta_a = by_key[("beta", "prov-a")]
        # t01-beta cites beta.example (primary); t02-beta cites alpha.example (opponent)
        assert beta_a["counts"]["primary"] == 1
        assert beta_a["counts"]["opponent"] == 1
        rollup = by_key[("all-parties", "prov-a")]
        assert rollup["total"] == 6
        # band matrices: prov-b has the one unavailable citation
        bands_b = [
            m for m in document["band_matrices"] if m["provider"] == "prov-b"
        ][0]
        assert bands_b["excluded_unavailable"] == 1
        assert bands_b["included_total"] == 3
        # webstruct: prov-a exposes visited sources, prov-b is skipped
        ws = {w["provider"]: w for w in document["webstruct"]}
        assert ws["prov-a"]["skipped"] is False
        assert ws["prov-a"]["n_cited_raw"] == 5
        assert ws["prov-a"]["n_other_raw"] == 1
        assert ws["prov-b"]["skipped"] is True
        assert "visited" in ws["prov-b"]["reason"]
        # answer stats exist per (country, party, provider)
        keys = {(s["party"], s["provider"]) for s in document["answer_stats"]}
        assert ("alpha", "prov-a") in keys and ("beta", "prov-b") in keys

    def test_report_emission_matches_document(self, world):
        config, store, root = world
        pipeline = self._run_all(config, store)
        document = pipeline.analyze()
        paths = pipeline.report(root / "out")
        names = sorted(str(p.relative_to(root / "out")) for p in paths)
        assert "report.json" in names
        assert "csv/proportions.csv" in names
        assert any(n.startswith("charts/citations_jp") for n in names)
        stored = json.loads((root / "out/report.json").read_text(encoding="utf-8"))
        assert stored == document

    def test_report_requires_analyze(self, world):
        config, store, _ = world
        pipeline = Pipeline(config, store)
        pipeline.init()
        with pytest.raises(PipelineError, match="analyze"):
            pipeline.report()

    def test_citation_details_join(self, world):
        config, store, _ = world
        pipeline = Pipeline(config, store)
        pipeline.init()
        pipeline.collect()
        pipeline.classify(allow_pending=True)
        pipeline.reflect()
        rows = pipeline.citation_details()
        assert len(rows) == N_CITATIONS
        by_url = {}
        for row in rows:
            by_url.setdefault(row["host"], []).append(row)
        pending = by_url["blog.example"][0]
        assert pending["status"] == "pending"
        assert pending["barrier"] is None
        primary = [r for r in by_url["alpha.example"] if r["party"] == "alpha"][0]
        assert primary["barrier"] == "primary" and primary["origin"] == "manifest_primary"
        opponent = [r for r in by_url["alpha.example"] if r["party"] == "beta"][0]
        assert opponent["barrier"] == "opponent"
        dead = by_url["dead.example"][0]
        assert dead["sim_max"] is None and dead["barrier"] == "medium"
        verbatim = [
            r
            for r in by_url["news.example"]
            if r["question_id"] == "t01-alpha" and r["provider"] == "prov-a"
        ][0]
        assert verbatim["band"] == "high"
        assert verbatim["answer_sentence_index"] == 0
        # rows carry country and both matrix axes, so a UI can filter
        assert {r["country"] for r in rows} == {"JP"}

    def test_full_run_deterministic_across_stores(self, tmp_path):
        (tmp_path / "w1").mkdir()
        (tmp_path / "w2").mkdir()
        outputs = []
        for name in ("w1", "w2"):
            config, store, root = _world(tmp_path / name)
            pipeline = self._run_all(config, store)
            pipeline.analyze()
            pipeline.report(root / "out")
            outputs.append((root / "out/report.json").read_bytes())
        assert outputs[0] == outputs[1]
