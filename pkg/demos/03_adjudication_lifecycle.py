"""The publisher-classification lifecycle, from manifests to human decisions.

Classification answers one question per cited host: who controls what gets
published there?  The precedence is strict — a host inside the target
party's own domain manifest is Primary, a host inside a same-country
rival's manifest is Opponent, and only the remaining "secondary" hosts
reach the two judges.  Judges must agree to decide; disagreement, judge
failure, and agreed-but-unclaimed "party" labels all queue for a human,
and until the queue drains the run refuses to aggregate.

This script walks all of those paths with scripted judges, then shows the
idempotence rules human decisions obey.  The same flow runs interactively
against a real corpus via ``geaudit adjudicate --config demo/audit.yaml``
and over HTTP via the review endpoints of ``geaudit serve``.

Run from the repository root:

    python3 demos/03_adjudication_lifecycle.py
"""

from geaudit.classifier import (
    AdjudicationItem,
    Classifier,
    ClassifierError,
    Decision,
    to_barrier,
)
from geaudit.corpus import Party
from geaudit.ge_client import AnswerRecord, CitationRef
from geaudit.judges import ScriptedJudge, default_prompt_path, load_prompt_template
from geaudit.whois import WhoisClient

# --- 1. a two-party scope -------------------------------------------------------

alpha = Party(
    id="alpha",
    country="XA",
    display_name_by_language={"en": "Alpha Party"},
    domain_manifest=frozenset({"alpha.example"}),
)
beta = Party(
    id="beta",
    country="XA",
    display_name_by_language={"en": "Beta Party"},
    domain_manifest=frozenset({"beta.example"}),
)

# Scripted judges replay canned replies in order; the real run wires these
# to chat endpoints (or to the static tables bundled with the demo corpus).
# Script: agree on the news host, disagree on the blog host.
judge_a = ScriptedJudge("judge-a", ["media", "platform"])
judge_b = ScriptedJudge("judge-b", ["media", "owned"])
classifier = Classifier(
    [alpha, beta],
    (judge_a, judge_b),
    WhoisClient(mode="off"),  # offline: every lookup records a skip
    load_prompt_template(default_prompt_path()),
)

# --- 2. one answer citing all four kinds of host ---------------------------------

record = AnswerRecord(
    question_id="q01-alpha",
    provider="demo",
    repeat_index=0,
    answer_text="Alpha set out its platform. Coverage and commentary followed.",
    citations=tuple(
        CitationRef.from_url(url)
        for url in (
            "https://alpha.example/platform",      # target's own manifest
            "https://www.beta.example/rebuttal",   # same-country rival
            "https://daily-news.example/story",    # judges will agree: media
            "https://politics-blog.example/post",  # judges will disagree
        )
    ),
    visited_sources=None,
    collected_at="2024-08-17T09:00:00Z",
)

classification = classifier.classify_run([record], {"q01-alpha": alpha})
print("after the judge pass:")
for (host, party_id), verdict in sorted(classification.outcomes.items()):
    print(f"  {host:<22} [{party_id}] {verdict.origin.value:<18} "
          f"{verdict.category.value:<8} -> barrier {to_barrier(verdict).value}")
print(f"  judge completions used: {classifier.judge_calls} "
      "(manifest hits never consult a judge)")

# --- 3. the adjudication queue -----------------------------------------------------

assert not classification.complete
for item in classification.pending.values():
    assert isinstance(item, AdjudicationItem)
    votes = ", ".join(f"{judge}={label}" for judge, label in item.votes)
    print(f"\npending: {item.host} ({votes})")

# Aggregation refuses to run over an incomplete classification unless the
# caller explicitly opts into excluding the pending hosts.
print("aggregation would refuse: classification.complete is", classification.complete)

# --- 4. a human decision makes the run total ----------------------------------------

decision = Decision(
    host="politics-blog.example",
    category="platform",
    adjudicator="demo-operator",
    timestamp="2024-08-17T09:05:00Z",
)
classifier.apply_decisions([decision])
classification = classifier.classify_run([record], {"q01-alpha": alpha})
verdict = classification.verdict_for("politics-blog.example", "alpha")
print(f"\nafter adjudication: {verdict.host} {verdict.origin.value} "
      f"{verdict.category.value} -> barrier {to_barrier(verdict).value}")
print("classification total:", classification.complete)
print(f"judge completions still {classifier.judge_calls}: "
      "verdicts are cached per host, re-running never re-asks")

# --- 5. decisions are idempotent, conflicts refuse -----------------------------------

classifier.apply_decisions([decision])  # same category again: a no-op
print("\nre-applying the identical decision: accepted (idempotent)")
try:
    classifier.apply_decisions([Decision(
        host="politics-blog.example",
        category="media",
        adjudicator="second-guesser",
        timestamp="2024-08-17T09:06:00Z",
    )])
except ClassifierError as exc:
    print(f"conflicting decision refused: {exc}")
