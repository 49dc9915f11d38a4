"""HTTP service: ingest, extraction runs, review queue and export.

Every route requires the configured bearer token. Review mutations go
through the store's state machine, so illegal transitions surface as 409
regardless of entry point. Extraction runs execute on a worker thread and
are observed by polling GET /runs/{id}.
"""

from __future__ import annotations

import threading
import uuid
from typing import Optional

from fastapi import Depends, FastAPI, Form, HTTPException, Request, Response, UploadFile
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse

from .clients import build_clients
from .config import RunConfig
from .errors import (
    DecodeError,
    EmptyDocument,
    InvalidTransition,
    ManifestMismatch,
    ReqFusionError,
    UnknownRequirement,
    UnknownRun,
)
from .ingest import DocumentFormat, load_document
from .pipeline import run_extraction, summarize
from .store import RequirementStore, ReviewStateKind, StoredRequirement
from .types import PegsCategory


def _requirement_payload(store: RequirementStore, stored: StoredRequirement) -> dict:
    r = stored.requirement
    try:
        trace = store.trace_back(r.req_id)
        excerpt = trace.excerpt
    except ReqFusionError:
        excerpt = ""
    return {
        "req_id": r.req_id,
        "run_id": stored.run_id,
        "text": r.text,
        "type": r.req_type.value,
        "pegs": r.pegs.value,
        "priority": r.priority.value,
        "category": r.category_label,
        "confidence": round(r.confidence, 6),
        "contributing_providers": sorted(r.contributing_providers),
        "state": stored.review.state.value,
        "reviewer": stored.review.reviewer,
        "note": stored.review.note,
        "trace": {
            "doc_id": r.trace.doc_id,
            "section": r.trace.section_label,
            "page": r.trace.page,
            "chunk_id": r.trace.chunk_id,
            "excerpt": excerpt,
        },
    }


def create_app(
    config: RunConfig,
    store: RequirementStore,
    clients: Optional[dict] = None,
) -> FastAPI:
    app = FastAPI(title="reqfusion", version="0.1.0")
    # The review client is a separately served browser app; auth is a bearer
    # token (no cookies), so permissive CORS is safe and required.
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["GET", "POST"],
        allow_headers=["Authorization", "Content-Type"],
    )
    jobs: dict[str, dict] = {}
    jobs_lock = threading.Lock()
    provider_clients = clients if clients is not None else build_clients(config.providers)

    def require_token(request: Request) -> None:
        header = request.headers.get("authorization", "")
        if header != f"Bearer {config.auth_token}":
            raise HTTPException(status_code=401, detail="invalid or missing bearer token")

    auth = Depends(require_token)

    @app.exception_handler(ReqFusionError)
    async def _domain_error(request: Request, exc: ReqFusionError):
        status = 500
        if isinstance(exc, (UnknownRequirement, UnknownRun)):
            status = 404
        elif isinstance(exc, InvalidTransition):
            status = 409
        elif isinstance(exc, (DecodeError, EmptyDocument, ManifestMismatch)):
            status = 422
        return JSONResponse(status_code=status, content={"detail": str(exc)})

    @app.post("/documents", dependencies=[auth])
    async def upload_document(
        file: UploadFile,
        format: str = Form("markdown"),
        title: str = Form(""),
        manifest: UploadFile | None = None,
    ):
        try:
            doc_format = DocumentFormat(format)
        except ValueError:
            raise HTTPException(status_code=422, detail=f"unknown format {format!r}")
        manifest_text = (await manifest.read()).decode("utf-8") if manifest else None
        doc = load_document(
            await file.read(),
            doc_format,
            title=title or (file.filename or "untitled"),
            manifest=manifest_text,
        )
        store.add_document(doc)
        return {"doc_id": doc.doc_id, "title": doc.title, "sections": len(doc.sections)}

    @app.post("/runs", dependencies=[auth])
    def start_run(body: dict):
        doc_id = body.get("doc_id")
        if not doc_id or not store.has_document(doc_id):
            raise HTTPException(status_code=404, detail=f"unknown document {doc_id!r}")
        doc = store.get_document(doc_id)
        run_id = f"run-{uuid.uuid4().hex[:12]}"
        with jobs_lock:
            jobs[run_id] = {"status": "running", "doc_id": doc_id}

        def work():
            try:
                outcome = run_extraction(
                    config, doc, store=store, clients=provider_clients, run_id=run_id
                )
                with jobs_lock:
                    if outcome.batch.all_failed:
                        jobs[run_id] = {
                            "status": "failed",
                            "doc_id": doc_id,
                            "detail": "every provider failed for every prompt",
                        }
                    else:
                        jobs[run_id] = {
                            "status": "complete",
                            "doc_id": doc_id,
                            "summary": summarize(outcome),
                        }
            except Exception as exc:  # surfaced via polling, not lost
                with jobs_lock:
                    jobs[run_id] = {"status": "failed", "doc_id": doc_id, "detail": str(exc)}

        threading.Thread(target=work, daemon=True).start()
        return {"run_id": run_id, "status": "running"}

    @app.get("/runs/{run_id}", dependencies=[auth])
    def run_status(run_id: str):
        with jobs_lock:
            job = jobs.get(run_id)
        if job is not None:
            return {"run_id": run_id, **job}
        # Runs persisted by the CLI are visible too.
        stats = store.flag_stats(run_id)
        return {"run_id": run_id, "status": "complete", "summary": stats}

    @app.get("/requirements", dependencies=[auth])
    def list_requirements(
        state: str | None = None,
        pegs: str | None = None,
        run: str | None = None,
    ):
        state_filter = None
        if state is not None:
            try:
                state_filter = ReviewStateKind(state)
            except ValueError:
                raise HTTPException(status_code=422, detail=f"unknown state {state!r}")
        pegs_filter = None
        if pegs is not None:
            try:
                pegs_filter = PegsCategory.from_text(pegs)
            except ValueError:
                raise HTTPException(status_code=422, detail=f"unknown pegs value {pegs!r}")
        items = store.list_requirements(state=state_filter, pegs=pegs_filter, run_id=run)
        items.sort(key=lambda s: (s.requirement.confidence, s.requirement.req_id))
        return {"items": [_requirement_payload(store, s) for s in items]}

    @app.post("/review/{req_id}", dependencies=[auth])
    def review(req_id: str, body: dict):
        decision = body.get("decision")
        if decision not in ("accept", "reject"):
            raise HTTPException(
                status_code=422, detail="decision must be 'accept' or 'reject'"
            )
        state = (
            ReviewStateKind.ACCEPTED if decision == "accept" else ReviewStateKind.REJECTED
        )
        reviewer = str(body.get("reviewer") or "anonymous")
        note = body.get("note")
        result = store.decide(req_id, state, reviewer=reviewer, note=note)
        return {
            "req_id": req_id,
            "state": result.state.value,
            "reviewer": result.reviewer,
            "decided_at": result.decided_at,
            "note": result.note,
        }

    @app.get("/export/{run_id}", dependencies=[auth])
    def export(run_id: str, format: str = "jsonl"):
        if format not in ("jsonl", "csv"):
            raise HTTPException(status_code=422, detail=f"unknown format {format!r}")
        payload = store.export_final(run_id, format)
        media = "text/csv" if format == "csv" else "application/jsonl"
        return Response(content=payload, media_type=media)

    @app.get("/metrics/{run_id}", dependencies=[auth])
    def run_metrics(run_id: str):
        return store.flag_stats(run_id)

    @app.get("/health")
    def health():
        return {"status": "ok"}

    return app
