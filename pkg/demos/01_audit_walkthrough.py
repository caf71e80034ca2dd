"""End-to-end audit walkthrough over the bundled recorded corpus.

The corpus under demo/ carries five repeats of every bundled question
against two recorded providers — aurora answers with per-sentence citation
annotations plus a visited-sources list, meridian cites at answer level —
together with page snapshots for every cited URL, static judge tables, and
the committed human adjudication decisions.  Everything replays offline,
so the whole pipeline runs in a couple of seconds with no credentials.

Run from the repository root:

    python3 demos/01_audit_walkthrough.py
"""

import tempfile
from pathlib import Path

from geaudit.config import load_config
from geaudit.harvest import PageCache, seed_page_fixtures
from geaudit.pipeline import Pipeline
from geaudit.store import RunStore

REPO = Path(__file__).resolve().parents[1]
DEMO = REPO / "demo"


# --- 1. a fresh run in a scratch store ---------------------------------------
# A run is an append-only ledger plus content caches.  Nothing below writes
# into the committed corpus: page snapshots are seeded into the scratch
# store's cache and provider answers replay from the recorded fixtures
# listed in demo/audit.yaml.

config = load_config(DEMO / "audit.yaml")
scratch = tempfile.TemporaryDirectory(prefix="geaudit-demo-")
store = RunStore(Path(scratch.name) / "store")
seeded = seed_page_fixtures(DEMO / "pages.jsonl", PageCache(store.cache_dir("pages")))

pipeline = Pipeline(config, store)
pipeline.init()
print(f"run {config.run_id!r}: {len(pipeline.questions)} questions, "
      f"{config.repeats} repeats, {len(config.providers)} providers, "
      f"{seeded} page snapshots seeded")

# --- 2. collect: replay the recorded provider exchanges ----------------------

stage = pipeline.collect()
print(f"collect[{stage['mode']}]: {stage['record_count']} answer records, "
      f"{stage['skip_count']} skipped")

# --- 3. classify every cited publisher ---------------------------------------
# Manifest matches (the target party's own domains, or a same-country
# rival's) never reach the judges.  Everything else gets two judge votes;
# the committed decisions file resolves the engineered disagreements, so
# the queue drains without interaction here.

classification = pipeline.classify()
origins: dict[str, int] = {}
for verdict in classification.outcomes.values():
    origins[verdict.origin.value] = origins.get(verdict.origin.value, 0) + 1
print(f"classify: {len(classification.outcomes)} (host, party) verdicts, "
      f"queue empty: {classification.complete}")
for origin in sorted(origins):
    print(f"  {origin:>18}: {origins[origin]}")

# --- 4. reflect: score citations against answer text -------------------------
# Each cited page is fetched from the seeded cache, split into sentences,
# and embedded alongside the answer; sim_max is the best cosine over all
# (answer sentence, citation sentence) pairs.

stage = pipeline.reflect()
print(f"reflect: {stage['page_count']} pages, backend {stage['backend_id']}")

# --- 5. analyze and read the headline tables ---------------------------------

document = pipeline.analyze()

print("\ncitation share by barrier class (All Parties rollups):")
for table in document["proportions"]:
    if table["party"] != "all-parties" or not table["total"]:
        continue
    shares = ", ".join(
        f"{token} {table['proportions'][token]:.2f}"
        for token in ("primary", "opponent", "low", "medium", "high")
    )
    print(f"  {table['country']} / {table['provider']:<8} n={table['total']:<5} {shares}")

print("\nreflection bands (share of classified, available citations):")
for matrix in document["band_matrices"]:
    row = ", ".join(f"{band} {count}" for band, count in matrix["band_totals"].items())
    print(f"  {matrix['country']} / {matrix['provider']:<8} {row}  "
          f"(unavailable {matrix['excluded_unavailable']})")

print("\nweb-structure comparison, cited vs unvisited pages:")
for table in document["webstruct"]:
    head = f"  {table['country']} / {table['provider']:<8}"
    if table["skipped"]:
        print(f"{head} skipped ({table['reason']})")
        continue
    for metric in table["metrics"]:
        mw, ks = metric["mw"], metric["ks"]
        print(f"{head} {metric['metric']:<13} "
              f"MW p={mw['p_value']:.4f}{mw['stars']:<3} "
              f"KS D={ks['statistic']:.3f} p={ks['p_value']:.4f}{ks['stars']}")
    head = " " * len(head)

print("\nanswers per group (JP aurora, first three parties):")
shown = 0
for stats in document["answer_stats"]:
    if stats["country"] != "JP" or stats["provider"] != "aurora":
        continue
    print(f"  {stats['party']:<10} answers={stats['n_answers']} "
          f"citations mean={stats['citations']['mean']:.1f} "
          f"sentences mean={stats['sentences']['mean']:.1f} "
          f"Sent./Cit.={stats['sent_per_cit']:.1f}")
    shown += 1
    if shown == 3:
        break

# --- 6. emit the report bundle ------------------------------------------------
# pipeline.report() re-emits the exact document stored by analyze; the same
# files ship under demo/golden and the acceptance suite compares them
# byte for byte.

out_dir = Path(scratch.name) / "report"
paths = pipeline.report(out_dir)
print(f"\nreport: {len(paths)} files under {out_dir}")
for path in paths:
    print(f"  {path.relative_to(out_dir)}")

scratch.cleanup()
