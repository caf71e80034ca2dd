"""Generate the bundled demo corpus and its golden report.

Writes demo/: a recorded answer corpus for two providers (five repeats
over the full bundled question set), a page-snapshot fixture covering
every cited and visited URL, two static judge tables with exactly two
disagreements, the decisions file resolving them, the audit config, and
the golden report produced by running the full pipeline once.

Everything is deterministic: one seeded RNG, pinned timestamps, the hash
embedding backend, and offline page fixtures.  Similarity bands are not
left to chance — "high" pages carry an answer-pool sentence verbatim and
"mid" pages carry a truncation of one tuned against the actual backend
until the full-sentence cosine lands in (0.8, 0.9].

Usage: python3 tools/make_demo.py [--out demo]
"""

from __future__ import annotations

import argparse
import hashlib
import json
import random
import shutil
import sys
import tempfile
from pathlib import Path

import numpy as np
import yaml

from geaudit.config import load_config
from geaudit.corpus import (
    default_parties_path,
    default_templates_path,
    load_manifest,
    load_templates,
    render_questions,
)
from geaudit.embeddings import HashEmbeddingBackend
from geaudit.ge_client import RawExchange, Recorder
from geaudit.harvest import (
    PageCache,
    PageSnapshot,
    extract_text,
    seed_page_fixtures,
    write_page_fixtures,
)
from geaudit.pipeline import Pipeline
from geaudit.store import RunStore

SEED = 20240817
TS = "2024-08-17T09:00:00Z"
FETCHED_AT = 1723885200.0  # 2024-08-17T09:00:00Z as epoch seconds
RUN_ID = "demo-2024"

# --- per-template topic and pole phrasing ------------------------------------
# (topic_ja, pole_a_ja, pole_b_ja, topic_en, pole_a_en, pole_b_en)
TOPICS = {
    "q01": ("財政運営", "財政規律の堅持", "成長投資の拡大",
            "fiscal policy", "debt restraint", "growth-oriented investment"),
    "q02": ("医療保険制度", "自己負担の見直し", "公費投入の拡充",
            "health coverage", "higher cost-sharing", "more public funding"),
    "q03": ("年金制度", "給付水準の調整", "現役世代の拠出増",
            "pension funding", "benefit adjustment", "higher contributions"),
    "q04": ("温室効果ガス削減", "規制の強化", "技術革新への補助",
            "emissions policy", "stronger regulations", "innovation subsidies"),
    "q05": ("電力政策", "原子力の活用", "脱原発の推進",
            "electricity policy", "nuclear power", "a nuclear phase-out"),
    "q06": ("産業政策", "重点分野の保護", "市場競争の促進",
            "industrial policy", "sector protection", "open competition"),
    "q07": ("雇用政策", "雇用の保護", "労働移動の支援",
            "employment policy", "job protection", "labor mobility"),
    "q08": ("人口減少対策", "移民の受け入れ拡大", "国内人材の活用",
            "population policy", "expanded immigration", "domestic resources"),
    "q09": ("住宅政策", "公営住宅の拡充", "供給規制の緩和",
            "housing policy", "public housing", "supply deregulation"),
    "q10": ("個人情報保護", "プライバシーの保護", "安全のための監視強化",
            "digital privacy", "privacy protection", "security surveillance"),
    "q11": ("社会の基本原理", "個人の自由", "経済的平等",
            "basic principles", "individual freedom", "economic equality"),
    "q12": ("政策決定の軸", "自国民の利益", "普遍的人権の尊重",
            "policy priorities", "citizens' interests", "universal rights"),
    "q13": ("社会制度の改革", "伝統の尊重", "大胆な改革",
            "social reform", "preserving traditions", "bold reform"),
    "q14": ("国家の役割", "個人の権利の保障", "共同体の利益",
            "the role of the state", "individual rights", "the common good"),
    "q15": ("国家の関与", "政府介入の最小化", "福祉国家の拡充",
            "state involvement", "minimal intervention", "an expanded welfare state"),
    "q16": ("政治的意思決定", "専門家主導の政策", "世論の直接反映",
            "decision-making", "expert-driven policy", "direct public opinion"),
    "q17": ("公共政策と宗教", "政教分離の徹底", "宗教的価値の尊重",
            "religion in public life", "strict secularism", "religious values"),
    "q18": ("言論規制", "表現の自由の尊重", "有害言論の規制",
            "speech regulation", "free expression", "harm-prevention rules"),
    "q19": ("法の基礎", "成文法の優位", "自然法の重視",
            "foundations of law", "legal positivism", "natural law"),
    "q20": ("国際問題への対応", "国家主権の堅持", "国際協調の推進",
            "international affairs", "national sovereignty", "multilateralism"),
}

FILLERS_JA = [
    "各党の公約は公式サイトで全文が公開されています。",
    "この争点は国会でも継続的に審議されています。",
    "世論調査では有権者の関心が高い分野とされています。",
    "詳細な政策比較は選挙公報にまとめられています。",
    "過去の国政選挙でも主要な争点となりました。",
    "専門家の間でも評価が分かれるテーマです。",
    "関連する法案が次の会期に提出される見通しです。",
    "地方組織でも同様の方針が確認されています。",
]
FILLERS_EN = [
    "Full manifestos are published on each party's official site.",
    "The issue remains under active debate in the legislature.",
    "Polling suggests voters rank this area among their top concerns.",
    "Detailed platform comparisons are collected in the election guide.",
    "The question was a major point of contention in past elections.",
    "Analysts remain divided over the likely outcome.",
    "Related bills are expected in the next session.",
    "Regional chapters have endorsed the same approach.",
]

HOSTS = {
    "JP": {
        "media": ["edo-times.example", "kyokai-news.example"],
        "platform": "burogu-hiroba.example",
        "academia": "seikei-u.example",
        "government": "tokei-kyoku.example",
        "non_media_industry": "sangyo-kai.example",
        "owned": "tosei-tsushin.example",
        "portal": "nihon-portal.example",
        "dead": "https://kiji-archive.example/expired/2023a",
    },
    "US": {
        "media": ["capitol-ledger.example", "prairie-wire.example"],
        "platform": "forumville.example",
        "academia": "civicslab.example",
        "government": "fedfacts.example",
        "non_media_industry": "tradegroup.example",
        "owned": "liberty-bugle.example",
        "portal": "beltway-portal.example",
        "dead": "https://gone-gazette.example/vanished/17",
    },
}
WIKI_HOST = "wikinote.example"
GLOBAL_HOST = "global-monitor.example"

JUDGE_CATEGORIES = {
    "edo-times.example": "media",
    "kyokai-news.example": "media",
    "kiji-archive.example": "media",
    "capitol-ledger.example": "media",
    "prairie-wire.example": "media",
    "gone-gazette.example": "media",
    "global-monitor.example": "media",
    "burogu-hiroba.example": "platform",
    "forumville.example": "platform",
    "seikei-u.example": "academia",
    "civicslab.example": "academia",
    "tokei-kyoku.example": "government",
    "fedfacts.example": "government",
    "sangyo-kai.example": "non_media_industry",
    "tradegroup.example": "non_media_industry",
    "tosei-tsushin.example": "owned",
    "nihon-portal.example": "platform",
    "beltway-portal.example": "platform",
}
# the two hosts the judges disagree on; resolved in decisions.jsonl
DISAGREEMENTS = {
    WIKI_HOST: ("platform", "media", "platform"),  # (kita, minami, human)
    "liberty-bugle.example": ("owned", "platform", "owned"),
}

_backend = HashEmbeddingBackend()


def _cosine(a: str, b: str) -> float:
    vecs = _backend.embed_batch([a, b])
    va = vecs[0] / np.linalg.norm(vecs[0])
    vb = vecs[1] / np.linalg.norm(vecs[1])
    return float(va @ vb)


def _stance(template_id: str, party_id: str) -> int:
    digest = hashlib.sha256(f"{template_id}:{party_id}".encode()).digest()
    return digest[0] % 2  # 0 = pole A, 1 = pole B


def _content_variants(question) -> list[str]:
    tid, pid = question.template_id, question.party_id
    topic_ja, a_ja, b_ja, topic_en, a_en, b_en = TOPICS[tid]
    if question.language == "ja":
        topic, pole = topic_ja, (a_ja, b_ja)[_stance(tid, pid)]
        party = _party_name(question)
        return [
            f"{party}は{topic}について{pole}を最優先する方針を示しています。",
            f"{party}は{topic}の分野で{pole}を重視する立場を取っています。",
            f"{party}の公約では{topic}に関して{pole}が柱とされています。",
            f"{party}は近年{topic}をめぐり{pole}を推進しています。",
        ]
    topic, pole = topic_en, (a_en, b_en)[_stance(tid, pid)]
    party = _party_name(question)
    return [
        f"{party} currently makes {pole} its top priority on {topic}.",
        f"{party} takes a position that favors {pole} in the area of {topic}.",
        f"The platform of {party} treats {pole} as a pillar of its {topic} agenda.",
        f"In recent years {party} has pushed {pole} when it comes to {topic}.",
    ]


_PARTY_NAME: dict[str, str] = {}


def _party_name(question) -> str:
    return _PARTY_NAME[question.party_id]


def _mid_truncation(sentence: str, language: str) -> str:
    """Longest truncation whose cosine vs the full sentence is in (0.8, 0.9].

    Falls back to the candidate closest below 0.9 when no truncation lands
    inside the band (hash noise can skip over it for short sentences).
    """
    if language == "ja":
        units = list(sentence.rstrip("。"))
        terminal = "。"
        join = ""
    else:
        units = sentence.rstrip(".").split(" ")
        terminal = "."
        join = " "
    best = None  # (cosine, candidate)
    for k in range(len(units) - 1, max(2, int(len(units) * 0.4)), -1):
        candidate = join.join(units[:k]) + terminal
        c = _cosine(sentence, candidate)
        if c > 0.9:
            continue
        if c > 0.8:
            return candidate
        if best is None or c > best[0]:
            best = (c, candidate)
    if best is None:
        raise RuntimeError(f"no usable truncation for {sentence!r}")
    return best[1]


# --- page construction --------------------------------------------------------


def _page_html(rng: random.Random, sentences: list[str], *, links: int, uls: int,
               headings: int, heading_words: list[str]) -> str:
    """Assemble HTML whose structural counts are exactly as requested."""
    parts = [f"<h1>{heading_words[0]}</h1>"]
    for i in range(headings):  # h2..h6 are the counted headings
        parts.append(f"<h2>{heading_words[(i + 1) % len(heading_words)]}</h2>")
    parts.append("<p>" + "".join(sentences) + "</p>")
    for i in range(uls):
        parts.append(f"<ul><li>{heading_words[i % len(heading_words)]}</li></ul>")
    for i in range(links):
        parts.append(f'<a href="/x/{i}">{heading_words[i % len(heading_words)]}</a>')
    return "".join(parts)


def _snapshot(url: str, html: str) -> PageSnapshot:
    return PageSnapshot(
        url=url,
        status="ok",
        http_code=200,
        html_bytes=html.encode("utf-8"),
        extracted_text=extract_text(html),
        fetched_at=FETCHED_AT,
    )


def _dead_snapshot(url: str) -> PageSnapshot:
    return PageSnapshot(
        url=url, status="http_error", http_code=404, html_bytes=b"",
        extracted_text="", fetched_at=FETCHED_AT,
    )


HEADING_CHOICES = [0, 1, 2, 4]  # powers of two keep the density identity exact


def build_pages(questions, parties_by_id, rng: random.Random) -> dict[str, PageSnapshot]:
    """Every URL the corpus may cite or visit, as offline snapshots."""
    pages: dict[str, PageSnapshot] = {}

    def put(url: str, sentences: list[str], *, lo_links: int, hi_links: int,
            heads: list[str], language: str):
        topic_words = heads
        html = _page_html(
            rng,
            sentences,
            links=rng.randint(lo_links, hi_links),
            uls=rng.choice([0, 1, 1, 2]),
            headings=rng.choice(HEADING_CHOICES),
            heading_words=topic_words,
        )
        pages[url] = _snapshot(url, html)

    for question in questions:
        tid, pid = question.template_id, question.party_id
        party = parties_by_id[pid]
        language = question.language
        topic_ja, _, _, topic_en, _, _ = TOPICS[tid]
        topic = topic_ja if language == "ja" else topic_en
        variants = _content_variants(question)
        hosts = HOSTS[party.country]

        if language == "ja":
            boiler = [
                f"{topic}に関する資料を掲載しています。",
                "最新の発表は随時更新されます。",
            ]
            media_boiler = [f"{topic}をめぐる各党の動きを追っています。",
                            "取材班による継続的な報道です。"]
            heads = [topic, "概要", "資料", "関連"]
        else:
            boiler = [
                f"Reference material on {topic} is collected here.",
                "New statements are added as they are released.",
            ]
            media_boiler = [f"Our desk tracks how the parties move on {topic}.",
                            "Continuing coverage from the newsroom."]
            heads = [topic, "Overview", "Documents", "Related"]

        # primary page: the party's own site carries variant 0 verbatim
        primary_domain = sorted(party.domain_manifest)[0]
        put(f"https://{primary_domain}/{tid}", [variants[0]] + boiler,
            lo_links=2, hi_links=5, heads=heads, language=language)

        # media page: one of the two country media hosts, mid-band truncation
        media_host = hosts["media"][_stance(tid, pid + "#media")]
        put(f"https://{media_host}/{tid}/{pid}",
            [_mid_truncation(variants[1], language)] + media_boiler,
            lo_links=3, hi_links=6, heads=heads, language=language)

    # per-(country, template) generic pages: low-band sources and visited-only
    for country, hosts in HOSTS.items():
        language = "ja" if country == "JP" else "en"
        cc = country.lower()
        for tid in TOPICS:
            topic_ja, _, _, topic_en, _, _ = TOPICS[tid]
            topic = topic_ja if language == "ja" else topic_en
            if language == "ja":
                generic = [f"{topic}について利用者が意見を交換しています。",
                           "投稿は各利用者の見解です。"]
                study = [f"本稿は{topic}に関する各党の立場を比較分析したものです。",
                         "方法と出典は付録に記載しています。"]
                stats = [f"{topic}に関する公的統計をまとめています。",
                         "数値は公表資料に基づきます。"]
                trade = [f"業界団体として{topic}への見解を示します。",
                         "加盟企業の調査結果を掲載しています。"]
                owned = [f"{topic}についての論説を掲載します。",
                         "編集部による解説記事です。"]
                hub = [f"{topic}の関連リンクを集めたページです。",
                       "各情報源への入り口としてご利用ください。"]
                index = [f"{topic}の記事一覧です。", "過去の報道を整理しています。"]
                abstract = [f"{topic}に関する研究要旨の一覧です。",
                            "全文は各論文ページを参照してください。"]
                heads = [topic, "一覧", "資料", "統計"]
            else:
                generic = [f"Members trade opinions on {topic} here.",
                           "Posts reflect the views of individual users."]
                study = [f"This working paper compares party positions on {topic}.",
                         "Methods and sources are listed in the appendix."]
                stats = [f"Official statistics touching {topic} are archived here.",
                         "Figures follow the published tables."]
                trade = [f"The association states its view on {topic}.",
                         "Member survey results are attached."]
                owned = [f"An editorial take on {topic}.",
                         "Commentary from our editors."]
                hub = [f"A collection of links related to {topic}.",
                       "Use this page as a starting point."]
                index = [f"Article listing for {topic}.",
                         "Earlier coverage is archived here."]
                abstract = [f"Research abstracts touching {topic}.",
                            "See the paper pages for full texts."]
                heads = [topic, "Listing", "Documents", "Statistics"]

            put(f"https://{hosts['platform']}/t/{tid}", generic,
                lo_links=1, hi_links=4, heads=heads, language=language)
            put(f"https://{WIKI_HOST}/wiki/{cc}/{tid}", generic,
                lo_links=2, hi_links=5, heads=heads, language=language)
            put(f"https://{hosts['academia']}/r/{tid}", study,
                lo_links=0, hi_links=2, heads=heads, language=language)
            put(f"https://{hosts['academia']}/r/{tid}/abstract", abstract,
                lo_links=0, hi_links=2, heads=heads, language=language)
            put(f"https://{hosts['government']}/s/{tid}", stats,
                lo_links=1, hi_links=3, heads=heads, language=language)
            put(f"https://{hosts['non_media_industry']}/i/{tid}", trade,
                lo_links=1, hi_links=3, heads=heads, language=language)
            put(f"https://{hosts['owned']}/o/{tid}", owned,
                lo_links=2, hi_links=4, heads=heads, language=language)
            put(f"https://{hosts['portal']}/hub/{tid}", hub,
                lo_links=5, hi_links=6, heads=heads, language=language)
            for media_host in hosts["media"]:
                put(f"https://{media_host}/{tid}/index", index,
                    lo_links=3, hi_links=6, heads=heads, language=language)

        pages[hosts["dead"]] = _dead_snapshot(hosts["dead"])

    # English world-desk pages, cited cross-language from Japanese answers
    for tid in TOPICS:
        _, _, _, topic_en, _, _ = TOPICS[tid]
        put(f"https://{GLOBAL_HOST}/world/{tid}",
            [f"A world-desk briefing on {topic_en}.",
             "Compiled from statements and filings."],
            lo_links=2, hi_links=5,
            heads=[topic_en, "Briefing", "Sources", "Notes"], language="en")

    return pages


# --- answer construction -------------------------------------------------------


def _citation_pool(question, party, rng: random.Random, *, scale: float) -> list[str]:
    """Draw this record's citation URLs (order shuffled, capped later)."""
    tid, pid = question.template_id, question.party_id
    hosts = HOSTS[party.country]
    cc = party.country.lower()
    media_host = hosts["media"][_stance(tid, pid + "#media")]
    draws = [
        (0.80, f"https://{media_host}/{tid}/{pid}"),
        (0.55, f"https://{sorted(party.domain_manifest)[0]}/{tid}"),
        (0.25, f"https://{hosts['platform']}/t/{tid}"
               if rng.random() < 0.5 else f"https://{WIKI_HOST}/wiki/{cc}/{tid}"),
        (0.15, f"https://{hosts['academia']}/r/{tid}"),
        (0.12, f"https://{hosts['government']}/s/{tid}"),
        (0.08, f"https://{hosts['non_media_industry']}/i/{tid}"),
        (0.07, f"https://{hosts['owned']}/o/{tid}"),
        (0.06 if party.country == "JP" else 0.04, f"https://{GLOBAL_HOST}/world/{tid}"),
        (0.012, hosts["dead"]),
    ]
    urls = [url for p, url in draws if rng.random() < p * scale]
    return urls


def _opponent_url(question, party, parties, rng: random.Random) -> str | None:
    rivals = [p for p in parties if p.country == party.country and p.id != party.id]
    if not rivals or rng.random() >= 0.08:
        return None
    rival = rng.choice(rivals)
    return f"https://{sorted(rival.domain_manifest)[0]}/{question.template_id}"


def build_record(question, party, parties, rng: random.Random, *, provider: str):
    """One answer: text, citations, and (for aurora) visited sources."""
    variants = _content_variants(question)
    fillers = FILLERS_JA if question.language == "ja" else FILLERS_EN
    content = variants[rng.randrange(4)]
    sentences = [content] + rng.sample(fillers, rng.choice([1, 2, 2, 3]))
    answer = "".join(sentences) if question.language == "ja" else " ".join(sentences)

    scale = 1.0 if provider == "aurora" else 0.6
    cap = 4 if provider == "aurora" else 2
    urls = _citation_pool(question, party, rng, scale=scale)
    opponent = _opponent_url(question, party, parties, rng)
    if opponent:
        urls.append(opponent)
    if not urls:
        tid, pid = question.template_id, question.party_id
        media_host = HOSTS[party.country]["media"][_stance(tid, pid + "#media")]
        urls = [f"https://{media_host}/{tid}/{pid}"]
    rng.shuffle(urls)
    urls = urls[:cap]

    visited = None
    if provider == "aurora":
        tid, pid = question.template_id, question.party_id
        hosts = HOSTS[party.country]
        media_host = hosts["media"][_stance(tid, pid + "#media")]
        other_media = [h for h in hosts["media"] if h != media_host][0]
        extras = [
            (0.50, f"https://{hosts['portal']}/hub/{tid}"),
            (0.30, f"https://{other_media}/{tid}/index"),
            (0.20, f"https://{media_host}/{tid}/index"),
            (0.10, f"https://{hosts['academia']}/r/{tid}/abstract"),
        ]
        visited = list(urls)
        for p, url in extras:
            if rng.random() < p and url not in visited:
                visited.append(url)
    return answer, urls, visited


def _aurora_response(answer: str, urls: list[str], visited: list[str]) -> dict:
    citations = []
    for url in urls:
        ref: dict = {"url": url}
        if "/index" not in url:
            ref["sentence_indices"] = [0]
        citations.append(ref)
    return {"answer_text": answer, "citations": citations, "visited_sources": visited}


def _meridian_response(answer: str, urls: list[str]) -> dict:
    return {"output": {"text": answer}, "sources": urls}


# --- assembly ------------------------------------------------------------------


def write_demo(out_dir: Path) -> None:
    rng = random.Random(SEED)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / ".gitignore").write_text("store/\n", encoding="utf-8")

    print("writing judge tables, decisions, and config ...", flush=True)
    (out_dir / "judges").mkdir(exist_ok=True)
    kita = dict(JUDGE_CATEGORIES)
    minami = dict(JUDGE_CATEGORIES)
    for host, (kita_label, minami_label, _) in DISAGREEMENTS.items():
        kita[host] = kita_label
        minami[host] = minami_label
    (out_dir / "judges/judge-kita.json").write_text(
        json.dumps(kita, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    (out_dir / "judges/judge-minami.json").write_text(
        json.dumps(minami, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    with open(out_dir / "decisions.jsonl", "w", encoding="utf-8") as fh:
        for host, (_, _, human) in sorted(DISAGREEMENTS.items()):
            fh.write(json.dumps(
                {"host": host, "category": human,
                 "adjudicator": "demo-operator", "timestamp": TS},
                ensure_ascii=False, sort_keys=True) + "\n")

    config_doc = {
        "run_id": RUN_ID,
        "countries": ["jp", "us"],
        "language_by_country": {"jp": "ja", "us": "en"},
        "repeats": 5,
        "seed": SEED,
        "embedding_backend": "hash",
        "judge_prompt": "default",
        "whois_mode": "off",
        "pages_offline": True,
        "timestamp": TS,
        "providers": [
            {"name": "aurora", "style": "annotated-json"},
            {"name": "meridian", "style": "answer-level"},
        ],
        "judges": [
            {"judge_id": "judge-kita", "kind": "static",
             "table_path": "judges/judge-kita.json"},
            {"judge_id": "judge-minami", "kind": "static",
             "table_path": "judges/judge-minami.json"},
        ],
        "fixtures": ["raw/aurora.jsonl", "raw/meridian.jsonl"],
        "decisions_file": "decisions.jsonl",
    }
    (out_dir / "audit.yaml").write_text(
        yaml.safe_dump(config_doc, allow_unicode=True, sort_keys=False), encoding="utf-8"
    )

    config = load_config(out_dir / "audit.yaml")
    templates = load_templates(default_templates_path())
    parties = load_manifest(default_parties_path())
    for party in parties:
        if party.country == "JP":
            _PARTY_NAME[party.id] = party.display_name_by_language["ja"]
        else:
            _PARTY_NAME[party.id] = party.display_name_by_language["en"]
    parties_by_id = {p.id: p for p in parties}
    questions = render_questions(templates, parties, config.study_config())
    jp = sum(1 for q in questions if parties_by_id[q.party_id].country == "JP")
    us = len(questions) - jp
    assert (jp, us) == (180, 100), f"unexpected corpus shape {(jp, us)}"

    print("building pages ...", flush=True)
    pages = build_pages(questions, parties_by_id, rng)
    write_page_fixtures(list(pages.values()), out_dir / "pages.jsonl")
    print(f"  {len(pages)} snapshots")

    print("recording answers ...", flush=True)
    (out_dir / "raw").mkdir(exist_ok=True)
    counts = {"aurora": 0, "meridian": 0}
    for provider in ("aurora", "meridian"):
        with Recorder(out_dir / "raw" / f"{provider}.jsonl") as recorder:
            for question in questions:
                party = parties_by_id[question.party_id]
                for repeat in range(5):
                    answer, urls, visited = build_record(
                        question, party, parties, rng, provider=provider
                    )
                    for url in urls + (visited or []):
                        assert url in pages, f"no snapshot for {url}"
                    if provider == "aurora":
                        doc = _aurora_response(answer, urls, visited)
                    else:
                        doc = _meridian_response(answer, urls)
                    recorder.record_raw(
                        question.id,
                        repeat,
                        RawExchange(
                            provider=provider,
                            request={"question_id": question.id,
                                     "question": question.rendered_text,
                                     "repeat_index": repeat},
                            response_bytes=json.dumps(
                                doc, ensure_ascii=False
                            ).encode("utf-8"),
                            timestamp=TS,
                        ),
                    )
                    counts[provider] += 1
    print(f"  {counts}")


def run_golden(out_dir: Path) -> dict:
    """Run the full pipeline in a scratch store and emit the golden report."""
    config = load_config(out_dir / "audit.yaml")
    with tempfile.TemporaryDirectory() as scratch:
        store = RunStore(Path(scratch) / "store")
        seed_page_fixtures(out_dir / "pages.jsonl", PageCache(store.cache_dir("pages")))
        pipeline = Pipeline(config, store)
        pipeline.init()
        print("collect ...", flush=True)
        stage = pipeline.collect()
        print(f"  {stage['record_count']} records")
        print("classify ...", flush=True)
        classification = pipeline.classify()
        human = [v for v in classification.outcomes.values() if v.origin.value == "human"]
        assert not classification.pending, "demo must classify clean with decisions"
        assert {v.host for v in human} == set(DISAGREEMENTS), "decisions not applied"
        print(f"  {len(classification.outcomes)} verdicts, {len(human)} human")
        print("reflect ...", flush=True)
        stage = pipeline.reflect()
        print(f"  {stage['page_count']} pages")
        print("analyze ...", flush=True)
        document = pipeline.analyze()

        bands = {"low": 0, "mid": 0, "high": 0}
        unavailable = 0
        for matrix in document["band_matrices"]:
            unavailable += matrix["excluded_unavailable"]
            for band, by_barrier in matrix["counts"].items():
                bands[band] += sum(by_barrier.values())
        assert all(v > 0 for v in bands.values()), f"band coverage gap: {bands}"
        assert unavailable > 0, "expected some unavailable citations"
        skipped = {t["provider"] for t in document["webstruct"] if t["skipped"]}
        assert skipped == {"meridian"}, f"webstruct skips wrong: {skipped}"
        print(f"  bands {bands}, unavailable {unavailable}")

        golden = out_dir / "golden"
        if golden.exists():
            shutil.rmtree(golden)
        paths = pipeline.report(golden)
        print(f"golden report: {len(paths)} files")
        return document


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="demo", help="output directory")
    args = parser.parse_args()
    out_dir = Path(args.out)
    write_demo(out_dir)
    run_golden(out_dir)
    print("done")
    return 0


if __name__ == "__main__":
    sys.exit(main())
