"""Operator surface: stage commands over one run, plus the review API server.

Exit-code contract: 0 on success, 1 on domain errors (pending
adjudications, bad inputs, missing stages), 2 on usage errors.  Every
stage command is idempotent per run: re-running with unchanged inputs is
a no-op, verified through the ledger's stage digests.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

from .analytics import AnalyticsError
from .classifier import ClassifierError, Decision
from .config import ConfigError, load_config
from .corpus import CorpusError
from .domains import DomainError
from .ge_client import GEClientError
from .harvest import HarvestError, PageCache, seed_page_fixtures
from .judges import JudgeError, parse_label
from .pipeline import Pipeline, PipelineError
from .report import ReportError
from .store import RunStore, StoreError

DOMAIN_ERRORS = (
    AnalyticsError,
    ClassifierError,
    ConfigError,
    CorpusError,
    DomainError,
    GEClientError,
    HarvestError,
    JudgeError,
    PipelineError,
    ReportError,
    StoreError,
)

DEFAULT_BIND = "127.0.0.1:8321"


def _pipeline(args) -> Pipeline:
    config = load_config(args.config)
    if getattr(args, "run", None):
        config = replace(config, run_id=args.run)
    if getattr(args, "seed", None) is not None:
        config = replace(config, seed=args.seed)
    store = RunStore(args.store or Path(args.config).parent / "store")
    return Pipeline(config, store)


def cmd_init(args, out) -> int:
    pipeline = _pipeline(args)
    run = pipeline.init()
    print(f"initialized run {run.id.run_id} (config {run.id.config_digest[:12]})", file=out)
    return 0


def cmd_render_questions(args, out) -> int:
    pipeline = _pipeline(args)
    questions = [
        {
            "id": q.id,
            "template_id": q.template_id,
            "party_id": q.party_id,
            "language": q.language,
            "text": q.rendered_text,
        }
        for q in pipeline.questions
    ]
    text = json.dumps(questions, ensure_ascii=False, indent=2) + "\n"
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
        print(f"wrote {len(questions)} questions to {args.out}", file=out)
    else:
        out.write(text)
    return 0


def _print_collect(stage: dict, out) -> None:
    print(
        f"collect[{stage['mode']}]: {stage['record_count']} records, "
        f"{stage['skip_count']} skipped",
        file=out,
    )


def cmd_collect(args, out) -> int:
    pipeline = _pipeline(args)
    _print_collect(pipeline.collect(force=args.force), out)
    return 0


def cmd_replay(args, out) -> int:
    pipeline = _pipeline(args)
    if args.fixtures:
        given = Path(args.fixtures)
        paths = sorted(str(p) for p in given.glob("*.jsonl")) if given.is_dir() else [str(given)]
        if not paths:
            raise PipelineError(f"no fixture files under {given}")
        pipeline = Pipeline(replace(pipeline.config, fixtures=tuple(paths)), pipeline.store)
    if not pipeline.config.fixtures:
        raise PipelineError("replay needs fixtures (config `fixtures:` or --fixtures)")
    _print_collect(pipeline.collect(force=args.force), out)
    return 0


def _print_classification(classification, out) -> None:
    print(
        f"classify: {len(classification.outcomes)} (host, party) verdicts, "
        f"{len(classification.pending)} pending",
        file=out,
    )


def cmd_classify(args, out) -> int:
    pipeline = _pipeline(args)
    classification = pipeline.classify(allow_pending=args.allow_pending, force=args.force)
    _print_classification(classification, out)
    return 0


def adjudicate_loop(pipeline: Pipeline, in_stream, out, adjudicator: str) -> int:
    """Terminal adjudication: show host + WHOIS excerpt + votes, read a label.

    Empty input skips the host; `quit` stops.  Returns 0 when the queue is
    drained, 1 when hosts remain.
    """
    queue = pipeline.pending_queue()
    if not queue:
        print("queue empty: nothing to adjudicate", file=out)
        return 0
    for item in queue:
        print(f"\nhost: {item.host}", file=out)
        excerpt = " ".join(item.whois_summary.split())[:200]
        print(f"whois: {excerpt or '(no whois text)'}", file=out)
        for judge_id, vote in item.votes:
            print(f"vote[{judge_id}]: {vote or 'no label'}", file=out)
        print("category (party/media/platform/owned/academia/non_media_industry/"
              "government; empty skips, `quit` stops): ", end="", file=out)
        out.flush()
        line = in_stream.readline()
        if not line or line.strip().lower() == "quit":
            break
        raw = line.strip()
        if not raw:
            continue
        label = parse_label(raw)
        if label is None:
            print(f"unrecognized label {raw!r}; skipping {item.host}", file=out)
            continue
        pipeline.record_decision(Decision(host=item.host, category=label, adjudicator=adjudicator))
        print(f"resolved {item.host} -> {label}", file=out)
    remaining = pipeline.pending_queue()
    if remaining:
        hosts = ", ".join(item.host for item in remaining)
        print(f"\n{len(remaining)} host(s) still pending: {hosts}", file=out)
        return 1
    print("\nqueue drained", file=out)
    return 0


def cmd_adjudicate(args, out) -> int:
    pipeline = _pipeline(args)
    return adjudicate_loop(pipeline, sys.stdin, out, args.adjudicator)


def cmd_reflect(args, out) -> int:
    pipeline = _pipeline(args)
    if args.pages:
        cache = PageCache(pipeline.store.cache_dir("pages"))
        seeded = seed_page_fixtures(args.pages, cache)
        print(f"seeded {seeded} page snapshots from {args.pages}", file=out)
    stage = pipeline.reflect(force=args.force)
    reflections = len(pipeline._window("reflection", stage))
    print(
        f"reflect: {stage['page_count']} pages, {reflections} citations scored "
        f"(backend {stage['backend_id']})",
        file=out,
    )
    return 0


def _analysis_document(pipeline: Pipeline, args) -> dict:
    try:
        if getattr(args, "force", False):
            raise PipelineError("forced")
        return pipeline.analysis_document()
    except PipelineError:
        return pipeline.analyze(
            allow_pending=args.allow_pending, force=getattr(args, "force", False)
        )


def cmd_analyze(args, out) -> int:
    pipeline = _pipeline(args)
    document = pipeline.analyze(allow_pending=args.allow_pending, force=args.force)
    print(
        f"analyze: {len(document['proportions'])} proportion tables, "
        f"{len(document['band_matrices'])} band matrices, "
        f"{len(document['webstruct'])} webstruct tables",
        file=out,
    )
    return 0


def cmd_webstruct(args, out) -> int:
    pipeline = _pipeline(args)
    document = _analysis_document(pipeline, args)
    for table in document["webstruct"]:
        head = f"{table['country']} {table['provider']}"
        if table["skipped"]:
            print(f"{head}: skipped ({table['reason']})", file=out)
            continue
        print(
            f"{head}: cited n={table['n_cited']} vs other n={table['n_other']} "
            f"(raw {table['n_cited_raw']}/{table['n_other_raw']}, seed {table['seed']})",
            file=out,
        )
        for metric in table["metrics"]:
            mw, ks = metric["mw"], metric["ks"]
            print(
                f"  {metric['metric']:<13} MW U={mw['statistic']} p={mw['p_value']}"
                f"{mw['stars']}  KS D={ks['statistic']} p={ks['p_value']}{ks['stars']}",
                file=out,
            )
    return 0


def cmd_report(args, out) -> int:
    pipeline = _pipeline(args)
    paths = pipeline.report(args.out)
    for path in paths:
        print(str(path), file=out)
    return 0


def cmd_serve(args, out) -> int:
    import uvicorn

    from .server import create_app

    pipeline = _pipeline(args)
    if args.ui is not None and not Path(args.ui).is_dir():
        raise ConfigError(f"--ui directory not found: {args.ui}")
    app = create_app(pipeline, ui_dir=args.ui)
    host, _, port = args.bind.rpartition(":")
    print(f"serving run {pipeline.config.run_id} on http://{host}:{port}", file=out)
    uvicorn.run(app, host=host, port=int(port), log_level="warning")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="geaudit",
        description="Audit which publishers a generative engine cites and how.",
    )
    sub = parser.add_subparsers(dest="command", required=True, metavar="command")

    def add(name: str, func, help_text: str, *, stage: bool = False, pending: bool = False):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", default="audit.yaml", help="audit config YAML")
        p.add_argument("--store", default=None, help="run-store root (default: <config dir>/store)")
        p.add_argument("--run", default=None, help="override the config run id")
        p.add_argument("--seed", type=int, default=None,
                       help="override the config seed (recorded in provenance)")
        if stage:
            p.add_argument("--force", action="store_true",
                           help="re-run the stage even when inputs are unchanged")
        if pending:
            p.add_argument("--allow-pending", action="store_true",
                           help="proceed with unresolved hosts excluded (and counted)")
        p.set_defaults(func=func)
        return p

    add("init", cmd_init, "create the run ledger")
    render = add("render-questions", cmd_render_questions, "print the rendered question set")
    render.add_argument("--out", default=None, help="write JSON here instead of stdout")
    add("collect", cmd_collect, "gather answers (live, or replay when fixtures configured)",
        stage=True)
    rep = add("replay", cmd_replay, "re-parse recorded fixtures into the ledger", stage=True)
    rep.add_argument("--fixtures", default=None,
                     help="fixture file or directory of *.jsonl (overrides config)")
    add("classify", cmd_classify, "classify cited hosts; exits 1 while hosts are pending",
        stage=True, pending=True)
    adj = add("adjudicate", cmd_adjudicate, "resolve pending hosts interactively")
    adj.add_argument("--adjudicator", default="operator", help="name recorded in decisions")
    refl = add("reflect", cmd_reflect, "harvest cited/visited pages and score reflection",
               stage=True)
    refl.add_argument("--pages", default=None,
                      help="page-snapshot fixture file to seed the cache (offline runs)")
    add("webstruct", cmd_webstruct, "print cited-vs-visited structural test tables",
        pending=True)
    add("analyze", cmd_analyze, "aggregate the ledger into the report document",
        stage=True, pending=True)
    report = add("report", cmd_report, "emit report files from the stored document")
    report.add_argument("--out", default=None, help="output directory")
    serve = add("serve", cmd_serve, "serve the review HTTP API")
    serve.add_argument("--bind", default=DEFAULT_BIND, help=f"host:port (default {DEFAULT_BIND})")
    serve.add_argument("--ui", default=None,
                       help="static review-UI bundle to serve at / (same origin as the API)")
    return parser


def main(argv: list[str] | None = None, out=None) -> int:
    out = out or sys.stdout
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args, out)
    except DOMAIN_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
