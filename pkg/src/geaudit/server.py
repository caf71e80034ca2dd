"""Review HTTP API: versioned JSON over REST-style paths.

Report, band-matrix, and queue reads are pure ledger projections and
work for any run in the store.  The citations drill-down and the single
write endpoint (adjudication decisions) need the served run's config —
party manifests for the join, judges for validation — so they answer
only for the run this server was started with.

Decisions use first-writer-wins: once a host is resolved, a conflicting
decision gets 409 while re-posting the identical decision stays
idempotent.  Every number a client renders comes from documents built
server-side; the report endpoint returns exactly the document the
`report` command emits.
"""

from __future__ import annotations

from pathlib import Path

from fastapi import FastAPI, HTTPException
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel

from .classifier import ClassifierError, Decision, RunClassification
from .pipeline import Pipeline, PipelineError
from .store import Run, StoreError

API_VERSION = 1


class DecisionBody(BaseModel):
    host: str
    category: str
    adjudicator: str


def create_app(pipeline: Pipeline, ui_dir: str | Path | None = None) -> FastAPI:
    app = FastAPI(title="geaudit review API", version=str(API_VERSION))
    store = pipeline.store

    def _open_run(run_id: str) -> Run:
        try:
            return store.open_run(run_id)
        except StoreError as exc:
            raise HTTPException(status_code=404, detail=str(exc)) from exc

    def _document(run_id: str) -> dict:
        entry = _open_run(run_id).last_entry("analysis")
        if entry is None:
            raise HTTPException(
                status_code=404, detail=f"stage 'analyze' has not run for {run_id!r}"
            )
        return entry.payload["document"]

    def _served(run_id: str) -> Pipeline:
        if run_id != pipeline.config.run_id:
            raise HTTPException(
                status_code=404,
                detail=(
                    f"run {run_id!r} needs this server's config; "
                    f"serving {pipeline.config.run_id!r}"
                ),
            )
        return pipeline

    @app.get("/v1/runs")
    def list_runs() -> list[dict]:
        return [
            {
                "run_id": r.run_id,
                "created_at": r.created_at,
                "config_digest": r.config_digest,
            }
            for r in store.list_runs()
        ]

    @app.get("/v1/runs/{run_id}/report")
    def get_report(run_id: str) -> JSONResponse:
        return JSONResponse(_document(run_id))

    @app.get("/v1/runs/{run_id}/bands")
    def get_bands(run_id: str) -> JSONResponse:
        return JSONResponse(_document(run_id)["band_matrices"])

    @app.get("/v1/runs/{run_id}/queue")
    def get_queue(run_id: str) -> JSONResponse:
        entry = _open_run(run_id).last_entry("classification")
        if entry is None:
            raise HTTPException(
                status_code=404, detail=f"stage 'classify' has not run for {run_id!r}"
            )
        classification = RunClassification.from_dict(entry.payload)
        return JSONResponse(
            [classification.pending[h].to_dict() for h in sorted(classification.pending)]
        )

    @app.get("/v1/runs/{run_id}/citations")
    def get_citations(
        run_id: str,
        country: str | None = None,
        provider: str | None = None,
        party: str | None = None,
        barrier: str | None = None,
        band: str | None = None,
        host: str | None = None,
    ) -> JSONResponse:
        target = _served(run_id)
        try:
            rows = target.citation_details()
        except PipelineError as exc:
            raise HTTPException(status_code=404, detail=str(exc)) from exc
        filters = {
            "country": country,
            "provider": provider,
            "party": party,
            "barrier": barrier,
            "band": band,
            "host": host,
        }
        for field, wanted in filters.items():
            if wanted is not None:
                rows = [r for r in rows if r[field] == wanted]
        return JSONResponse(rows)

    @app.post("/v1/runs/{run_id}/decisions")
    def post_decision(run_id: str, body: DecisionBody) -> JSONResponse:
        target = _served(run_id)
        try:
            decision = Decision(
                host=body.host, category=body.category, adjudicator=body.adjudicator
            )
        except ClassifierError as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from exc
        try:
            classification = target.record_decision(decision)
        except ClassifierError as exc:
            status = 409 if "conflicts" in str(exc) else 400
            raise HTTPException(status_code=status, detail=str(exc)) from exc
        except PipelineError as exc:
            raise HTTPException(status_code=404, detail=str(exc)) from exc
        return JSONResponse(
            {
                "host": body.host,
                "category": body.category,
                "pending": [
                    classification.pending[h].to_dict()
                    for h in sorted(classification.pending)
                ],
            }
        )

    # The review UI is an optional static bundle served same-origin so its
    # fetches need no CORS.  Mounted last: /v1 routes keep precedence.
    if ui_dir is not None:
        app.mount("/", StaticFiles(directory=ui_dir, html=True), name="ui")

    return app
