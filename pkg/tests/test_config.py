"""Config loading: YAML round trip, validation, path anchoring, digests."""

import pytest

from geaudit.config import (
    AuditConfig,
    ConfigError,
    JudgeSpec,
    config_digest,
    load_config,
)
from geaudit.adapters import ProviderConfig


def _judges():
    return (
        JudgeSpec(judge_id="judge-a", kind="static", table_path="/tables/a.json"),
        JudgeSpec(judge_id="judge-b", kind="static", table_path="/tables/b.json"),
    )


def _config(**overrides) -> AuditConfig:
    base = dict(
        run_id="run-1",
        countries=("jp",),
        language_by_country={"jp": "ja"},
        repeats=2,
        seed=7,
        embedding_backend="hash",
        judge_prompt="default",
        whois_mode="off",
        providers=(ProviderConfig(name="prov-a", style="annotated-json"),),
        judges=_judges(),
    )
    base.update(overrides)
    return AuditConfig(**base)


FULL_YAML = """\
run_id: demo-2024
countries: [jp, us]
language_by_country: {jp: ja, us: en}
repeats: 5
seed: 20240817
embedding_backend: hash
judge_prompt: literal
whois_mode: "off"
pages_offline: true
timestamp: "2024-08-17T00:00:00Z"
providers:
  - {name: prov-a, style: annotated-json, endpoint: "http://localhost:9", model: m-a}
  - {name: prov-b, style: answer-level}
judges:
  - {judge_id: judge-a, kind: static, table_path: judges/a.json}
  - {judge_id: judge-b, kind: http, endpoint: "http://localhost:9/v1", model: m-j,
     credential_env: JUDGE_B_KEY}
fixtures: [raw/prov-a.jsonl, /abs/raw/prov-b.jsonl]
templates_path: corpus/templates.yaml
parties_path: corpus/parties.yaml
decisions_file: decisions.jsonl
report_formats: [json, csv]
"""


class TestLoadConfig:
    def test_full_round_trip(self, tmp_path):
        path = tmp_path / "audit.yaml"
        path.write_text(FULL_YAML, encoding="utf-8")
        cfg = load_config(path)
        assert cfg.run_id == "demo-2024"
        assert cfg.countries == ("JP", "US")
        assert cfg.language_by_country == {"JP": "ja", "US": "en"}
        assert cfg.repeats == 5
        assert cfg.seed == 20240817
        assert cfg.judge_prompt == "literal"
        assert cfg.whois_mode == "off"
        assert cfg.pages_offline is True
        assert cfg.timestamp == "2024-08-17T00:00:00Z"
        assert [p.name for p in cfg.providers] == ["prov-a", "prov-b"]
        assert cfg.providers[0].style == "annotated-json"
        assert cfg.judges[0].kind == "static"
        assert cfg.judges[1].credential_env == "JUDGE_B_KEY"
        assert cfg.report_formats == ("json", "csv")

    def test_relative_paths_resolve_against_config_dir(self, tmp_path):
        sub = tmp_path / "cfg"
        sub.mkdir()
        path = sub / "audit.yaml"
        path.write_text(FULL_YAML, encoding="utf-8")
        cfg = load_config(path)
        assert cfg.fixtures[0] == str(sub / "raw/prov-a.jsonl")
        assert cfg.fixtures[1] == "/abs/raw/prov-b.jsonl"  # absolute stays put
        assert cfg.templates_path == str(sub / "corpus/templates.yaml")
        assert cfg.parties_path == str(sub / "corpus/parties.yaml")
        assert cfg.decisions_file == str(sub / "decisions.jsonl")
        assert cfg.judges[0].table_path == str(sub / "judges/a.json")
        assert cfg.judges[1].table_path == ""  # http judge has no table

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError, match="not found"):
            load_config(tmp_path / "nope.yaml")

    def test_non_mapping_rejected(self, tmp_path):
        path = tmp_path / "bad.yaml"
        path.write_text("- just\n- a list\n", encoding="utf-8")
        with pytest.raises(ConfigError, match="mapping"):
            load_config(path)

    def test_bad_yaml_rejected(self, tmp_path):
        path = tmp_path / "bad.yaml"
        path.write_text("run_id: [unclosed\n", encoding="utf-8")
        with pytest.raises(ConfigError, match="bad YAML"):
            load_config(path)


class TestValidation:
    def test_run_id_required(self):
        with pytest.raises(ConfigError, match="run_id"):
            _config(run_id="")

    def test_repeats_positive(self):
        with pytest.raises(ConfigError, match="repeats"):
            _config(repeats=0)

    def test_judge_prompt_enum(self):
        with pytest.raises(ConfigError, match="judge_prompt"):
            _config(judge_prompt="verbose")

    def test_whois_mode_enum(self):
        with pytest.raises(ConfigError, match="whois_mode"):
            _config(whois_mode="cached")

    def test_exactly_two_judges(self):
        with pytest.raises(ConfigError, match="two judges"):
            _config(judges=_judges()[:1])

    def test_provider_required(self):
        with pytest.raises(ConfigError, match="provider"):
            _config(providers=())

    def test_language_required_per_country(self):
        with pytest.raises(ConfigError, match="US"):
            _config(countries=("jp", "us"))

    def test_countries_uppercased(self):
        cfg = _config()
        assert cfg.countries == ("JP",)
        assert "JP" in cfg.language_by_country

    def test_static_judge_needs_table(self):
        with pytest.raises(ConfigError, match="table_path"):
            JudgeSpec(judge_id="j", kind="static")

    def test_http_judge_needs_endpoint(self):
        with pytest.raises(ConfigError, match="endpoint"):
            JudgeSpec(judge_id="j", kind="http")

    def test_unknown_judge_kind(self):
        with pytest.raises(ConfigError, match="kind"):
            JudgeSpec(judge_id="j", kind="oracle", table_path="t")


class TestDigest:
    def test_digest_stable(self):
        assert config_digest(_config()) == config_digest(_config())

    def test_digest_sensitive_to_seed(self):
        assert config_digest(_config(seed=7)) != config_digest(_config(seed=8))

    def test_digest_sensitive_to_prompt_variant(self):
        assert config_digest(_config(judge_prompt="default")) != config_digest(
            _config(judge_prompt="literal")
        )

    def test_digest_is_hex_sha256(self):
        digest = config_digest(_config())
        assert len(digest) == 64
        assert set(digest) <= set("0123456789abcdef")

    def test_digest_location_independent(self):
        """Path bindings must not leak into the digest: the same audit
        checked out under a different root keeps its identity."""
        at_root_a = _config(
            fixtures=("/a/raw/p.jsonl",),
            templates_path="/a/corpus/templates.yaml",
            parties_path="/a/corpus/parties.yaml",
            decisions_file="/a/decisions.jsonl",
            judges=(
                JudgeSpec(judge_id="judge-a", kind="static", table_path="/a/ta.json"),
                JudgeSpec(judge_id="judge-b", kind="static", table_path="/a/tb.json"),
            ),
        )
        at_root_b = _config(
            fixtures=("/b/raw/p.jsonl",),
            templates_path="/b/corpus/templates.yaml",
            parties_path="/b/corpus/parties.yaml",
            decisions_file="/b/decisions.jsonl",
            judges=(
                JudgeSpec(judge_id="judge-a", kind="static", table_path="/b/ta.json"),
                JudgeSpec(judge_id="judge-b", kind="static", table_path="/b/tb.json"),
            ),
        )
        assert config_digest(at_root_a) == config_digest(at_root_b)


class TestStudyConfig:
    def test_projection(self):
        cfg = _config(party_ids=("alpha", "beta"))
        study = cfg.study_config()
        assert study.countries == ("JP",)
        assert study.parties == ("alpha", "beta")
        assert study.providers == ("prov-a",)
        assert study.repeats == 2
        assert study.language_by_country == {"JP": "ja"}
