"""Report emission: canonical JSON, CSV tables, and SVG charts.

The machine-readable report is canonical: sorted keys, fixed float rounding
(proportions to 3 decimals, answer statistics to 1, p-values to 6
significant digits), no wall-clock values — so one bundle always serializes
to byte-identical output.  Every emitted document validates against the
bundled schema before it is written.
"""

from __future__ import annotations

import csv
import io
import json
from importlib import resources
from pathlib import Path

import jsonschema

from .analytics import BAND_TOKENS, BARRIER_TOKENS, ReportBundle
from .charts import (
    marimekko_data,
    marimekko_svg_from_data,
    stacked_bar_data,
    stacked_bar_svg_from_data,
)

REPORT_FORMAT = "geaudit-report"
REPORT_VERSION = 1

PROPORTION_DECIMALS = 3
STAT_DECIMALS = 1
STATISTIC_DECIMALS = 4


class ReportError(ValueError):
    pass


def _round_p(p: float) -> float:
    return float(f"{p:.6g}")


def _round_opt(x: float | None, decimals: int) -> float | None:
    return None if x is None else round(x, decimals)


def _round_props(props: dict[str, float]) -> dict[str, float]:
    return {k: round(v, PROPORTION_DECIMALS) for k, v in props.items()}


def _test_dict(d: dict) -> dict:
    d = dict(d)
    d["statistic"] = round(d["statistic"], STATISTIC_DECIMALS)
    d["p_value"] = _round_p(d["p_value"])
    return d


def _moments(d: dict) -> dict:
    return {k: round(v, STAT_DECIMALS) for k, v in d.items()}


def load_schema() -> dict:
    text = resources.files("geaudit.data").joinpath("report_schema.json").read_text("utf-8")
    return json.loads(text)


def report_document(bundle: ReportBundle) -> dict:
    """The canonical report document (rounded floats, embedded chart data)."""
    raw = bundle.to_dict()
    doc = {
        "format": REPORT_FORMAT,
        "version": REPORT_VERSION,
        "run_id": raw["run_id"],
        "provenance": raw["provenance"],
        "proportions": [],
        "band_matrices": [],
        "webstruct": [],
        "answer_stats": [],
        "charts": [],
    }
    for table in raw["proportions"]:
        table = dict(table)
        table["proportions"] = _round_props(table["proportions"])
        doc["proportions"].append(table)
    for matrix in raw["band_matrices"]:
        matrix = dict(matrix)
        matrix["proportions"] = {
            band: _round_props(props) for band, props in matrix["proportions"].items()
        }
        doc["band_matrices"].append(matrix)
    for table in raw["webstruct"]:
        table = dict(table)
        table["metrics"] = [
            {"metric": m["metric"], "mw": _test_dict(m["mw"]), "ks": _test_dict(m["ks"])}
            for m in table["metrics"]
        ]
        doc["webstruct"].append(table)
    for stats in raw["answer_stats"]:
        stats = dict(stats)
        for field in ("citations", "unique", "sentences"):
            stats[field] = _moments(stats[field])
        stats["sent_per_cit"] = _round_opt(stats["sent_per_cit"], STAT_DECIMALS)
        stats["sent_per_cit_answer_mean"] = _round_opt(
            stats["sent_per_cit_answer_mean"], STAT_DECIMALS
        )
        doc["answer_stats"].append(stats)
    countries = sorted({t.country for t in bundle.proportions})
    for country in countries:
        data = stacked_bar_data(list(bundle.proportions), country)
        data["bars"] = [
            {**bar, "segments": _round_props(bar["segments"])} for bar in data["bars"]
        ]
        doc["charts"].append(data)
    for matrix in bundle.band_matrices:
        data = marimekko_data(matrix)
        data["columns"] = [
            {
                **col,
                "width": round(col["width"], PROPORTION_DECIMALS),
                "segments": _round_props(col["segments"]),
            }
            for col in data["columns"]
        ]
        doc["charts"].append(data)
    return doc


def render_report_json(bundle: ReportBundle) -> str:
    doc = report_document(bundle)
    jsonschema.validate(doc, load_schema())
    return json.dumps(doc, ensure_ascii=False, sort_keys=True, indent=2) + "\n"


def _csv_text(header: list[str], rows: list[list]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


def proportions_csv(doc: dict) -> str:
    header = (
        ["country", "party", "provider", "total", "excluded_pending"]
        + [f"count_{t}" for t in BARRIER_TOKENS]
        + [f"prop_{t}" for t in BARRIER_TOKENS]
    )
    rows = []
    for table in doc["proportions"]:
        props = table["proportions"]
        rows.append(
            [table["country"], table["party"], table["provider"], table["total"],
             table["excluded_pending"]]
            + [table["counts"][t] for t in BARRIER_TOKENS]
            + [props.get(t, "") for t in BARRIER_TOKENS]
        )
    return _csv_text(header, rows)


def bands_csv(doc: dict) -> str:
    header = (
        ["country", "provider", "band", "band_total", "excluded_unavailable",
         "excluded_pending"]
        + [f"count_{t}" for t in BARRIER_TOKENS]
        + [f"prop_{t}" for t in BARRIER_TOKENS]
    )
    rows = []
    for matrix in doc["band_matrices"]:
        for band in BAND_TOKENS:
            props = matrix["proportions"][band]
            rows.append(
                [matrix["country"], matrix["provider"], band, matrix["band_totals"][band],
                 matrix["excluded_unavailable"], matrix["excluded_pending"]]
                + [matrix["counts"][band][t] for t in BARRIER_TOKENS]
                + [props.get(t, "") for t in BARRIER_TOKENS]
            )
    return _csv_text(header, rows)


def webstruct_csv(doc: dict) -> str:
    header = [
        "country", "provider", "skipped", "reason", "metric", "n_cited", "n_other",
        "mw_statistic", "mw_p", "mw_method", "mw_stars",
        "ks_statistic", "ks_p", "ks_stars", "seed",
    ]
    rows = []
    for table in doc["webstruct"]:
        if table["skipped"]:
            rows.append(
                [table["country"], table["provider"], True, table["reason"], "", "", "",
                 "", "", "", "", "", "", "", table["seed"]]
            )
            continue
        for m in table["metrics"]:
            rows.append(
                [table["country"], table["provider"], False, "", m["metric"],
                 table["n_cited"], table["n_other"],
                 m["mw"]["statistic"], m["mw"]["p_value"], m["mw"]["method"],
                 m["mw"]["stars"],
                 m["ks"]["statistic"], m["ks"]["p_value"], m["ks"]["stars"],
                 table["seed"]]
            )
    return _csv_text(header, rows)


def answer_stats_csv(doc: dict) -> str:
    header = [
        "country", "party", "provider", "n_answers",
        "citations_mean", "citations_median", "citations_std",
        "unique_mean", "unique_median", "unique_std",
        "sentences_mean", "sentences_median", "sentences_std",
        "sent_per_cit", "sent_per_cit_answer_mean",
    ]
    rows = []
    for s in doc["answer_stats"]:
        rows.append(
            [s["country"], s["party"], s["provider"], s["n_answers"],
             s["citations"]["mean"], s["citations"]["median"], s["citations"]["std"],
             s["unique"]["mean"], s["unique"]["median"], s["unique"]["std"],
             s["sentences"]["mean"], s["sentences"]["median"], s["sentences"]["std"],
             "" if s["sent_per_cit"] is None else s["sent_per_cit"],
             "" if s["sent_per_cit_answer_mean"] is None else s["sent_per_cit_answer_mean"]]
        )
    return _csv_text(header, rows)


def emit_from_document(
    doc: dict,
    out_dir: str | Path,
    formats: tuple[str, ...] = ("json", "csv", "svg"),
) -> list[Path]:
    """Write report artifacts from a canonical report document.

    This is the single emission path: the stored analysis document, the
    files on disk, and the serve endpoint all carry the same bytes.
    """
    unknown = set(formats) - {"json", "csv", "svg"}
    if unknown:
        raise ReportError(f"unknown report formats: {sorted(unknown)}")
    jsonschema.validate(doc, load_schema())
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []

    def _write(rel: str, text: str) -> None:
        path = out_dir / rel
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text, encoding="utf-8")
        written.append(path)

    if "json" in formats:
        _write("report.json", json.dumps(doc, ensure_ascii=False, sort_keys=True, indent=2) + "\n")
    if "csv" in formats:
        _write("csv/proportions.csv", proportions_csv(doc))
        _write("csv/bands.csv", bands_csv(doc))
        _write("csv/webstruct.csv", webstruct_csv(doc))
        _write("csv/answer_stats.csv", answer_stats_csv(doc))
    if "svg" in formats:
        for chart in doc["charts"]:
            if chart["kind"] == "stacked_bars":
                _write(
                    f"charts/citations_{chart['country'].lower()}.svg",
                    stacked_bar_svg_from_data(chart),
                )
            elif chart["kind"] == "marimekko":
                _write(
                    f"charts/bands_{chart['country'].lower()}_{chart['provider']}.svg",
                    marimekko_svg_from_data(chart),
                )
    return written


def emit_report(
    bundle: ReportBundle,
    out_dir: str | Path,
    formats: tuple[str, ...] = ("json", "csv", "svg"),
) -> list[Path]:
    """Write the report artifacts under out_dir; returns the written paths."""
    return emit_from_document(report_document(bundle), out_dir, formats)
