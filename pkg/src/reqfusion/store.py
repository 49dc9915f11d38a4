"""File-backed requirement store with review workflow and traceability.

One append-only JSON-lines log holds documents, runs (with their merged
requirements and trace links) and review decisions; state is rebuilt by
replay on open. Review decisions additionally go to a plain-text audit log,
one line per decision. All mutations are serialized through a single
writer lock; reads see consistent snapshots.
"""

from __future__ import annotations

import csv
import datetime as dt
import hashlib
import io
import json
import threading
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Iterable

from .consensus import MergedRequirement, Trace
from .errors import (
    DuplicateRun,
    InvalidTransition,
    OrphanTrace,
    StorageError,
    UnknownRequirement,
    UnknownRun,
)
from .ingest import Document, DocumentFormat, Section
from .types import PEGS_ORDER, PegsCategory, Priority, ReqType

EXPORT_FIELDS = (
    "req_id",
    "text",
    "type",
    "pegs",
    "priority",
    "category",
    "confidence",
    "state",
    "doc_id",
    "section",
    "page",
)

# Review decisions tolerated in the log before an automatic compaction pass.
_COMPACT_AFTER_DECISIONS = 1000


class ReviewStateKind(str, Enum):
    AUTO_ACCEPTED = "auto_accepted"
    PENDING_REVIEW = "pending"
    ACCEPTED = "accepted"
    REJECTED = "rejected"


# Only pending items may move, and only to a terminal decision.
_LEGAL_TRANSITIONS = {
    (ReviewStateKind.PENDING_REVIEW, ReviewStateKind.ACCEPTED),
    (ReviewStateKind.PENDING_REVIEW, ReviewStateKind.REJECTED),
}

_EXPORTABLE = {ReviewStateKind.AUTO_ACCEPTED, ReviewStateKind.ACCEPTED}


@dataclass(frozen=True)
class ReviewState:
    state: ReviewStateKind
    reviewer: str | None = None
    decided_at: str | None = None
    note: str | None = None


@dataclass(frozen=True)
class TraceLink:
    req_id: str
    doc_id: str
    section_label: str
    page: int
    pegs: PegsCategory
    confidence: float
    downstream_ids: tuple[str, ...] = ()


@dataclass
class StoredRequirement:
    run_id: str
    requirement: MergedRequirement
    review: ReviewState
    trace_link: TraceLink


@dataclass(frozen=True)
class TraceResult:
    excerpt: str
    section_label: str
    page: int


def _now_iso() -> str:
    return dt.datetime.now(dt.timezone.utc).strftime("%Y-%m-%dT%H:%M:%S.%fZ")


def _requirement_to_obj(req: MergedRequirement) -> dict:
    return {
        "req_id": req.req_id,
        "text": req.text,
        "type": req.req_type.value,
        "pegs": req.pegs.value,
        "priority": req.priority.value,
        "category": req.category_label,
        "confidence": req.confidence,
        "providers": sorted(req.contributing_providers),
        "flagged": req.flagged_for_review,
        "trace": {
            "doc_id": req.trace.doc_id,
            "section": req.trace.section_label,
            "page": req.trace.page,
            "chunk_id": req.trace.chunk_id,
        },
    }


def _requirement_from_obj(obj: dict) -> MergedRequirement:
    trace = obj["trace"]
    return MergedRequirement(
        req_id=obj["req_id"],
        text=obj["text"],
        req_type=ReqType(obj["type"]),
        pegs=PegsCategory(obj["pegs"]),
        priority=Priority(obj["priority"]),
        category_label=obj["category"],
        confidence=obj["confidence"],
        contributing_providers=frozenset(obj["providers"]),
        flagged_for_review=obj["flagged"],
        trace=Trace(
            doc_id=trace["doc_id"],
            section_label=trace["section"],
            page=trace["page"],
            chunk_id=trace["chunk_id"],
        ),
    )


class RequirementStore:
    """Single-writer embedded store over one JSON-lines file."""

    def __init__(self, path: str | Path, *, create: bool = True):
        self.path = Path(path)
        self.audit_path = self.path.with_name(self.path.name + ".audit.log")
        self._lock = threading.RLock()
        self._documents: dict[str, Document] = {}
        self._runs: dict[str, list[str]] = {}
        self._requirements: dict[str, StoredRequirement] = {}
        self._decision_lines = 0
        if self.path.exists():
            self._load()
        elif create:
            self.path.parent.mkdir(parents=True, exist_ok=True)
            self.path.touch()
        else:
            raise StorageError(f"store file not found: {self.path}")

    # -- log plumbing -------------------------------------------------------

    def _load(self) -> None:
        try:
            raw = self.path.read_text(encoding="utf-8")
        except OSError as exc:
            raise StorageError(f"cannot read store {self.path}: {exc}") from exc
        for lineno, line in enumerate(raw.splitlines(), start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise StorageError(f"{self.path}:{lineno}: corrupt record: {exc}") from exc
            self._apply(obj, from_log=True)

    def _append(self, obj: dict) -> None:
        if not self.path.exists():
            raise StorageError(f"store file disappeared: {self.path}")
        with self.path.open("a", encoding="utf-8") as fh:
            fh.write(json.dumps(obj, ensure_ascii=False) + "\n")
            fh.flush()

    def _check_backing_file(self) -> None:
        if not self.path.exists():
            raise StorageError(f"store file disappeared: {self.path}")

    def _apply(self, obj: dict, from_log: bool = False) -> None:
        kind = obj.get("rec")
        if kind == "document":
            sections = tuple(
                Section(s["label"], s["page"], s["body"]) for s in obj["sections"]
            )
            doc = Document(
                doc_id=obj["doc_id"],
                title=obj["title"],
                format=DocumentFormat(obj["format"]),
                sections=sections,
            )
            self._documents[doc.doc_id] = doc
        elif kind == "run":
            req_ids = []
            for req_obj in obj["requirements"]:
                req = _requirement_from_obj(req_obj)
                state = ReviewStateKind(req_obj["state"])
                link = TraceLink(
                    req_id=req.req_id,
                    doc_id=req.trace.doc_id,
                    section_label=req.trace.section_label,
                    page=req.trace.page,
                    pegs=req.pegs,
                    confidence=req.confidence,
                    downstream_ids=tuple(req_obj.get("downstream_ids", ())),
                )
                self._requirements[req.req_id] = StoredRequirement(
                    run_id=obj["run_id"],
                    requirement=req,
                    review=ReviewState(state=state),
                    trace_link=link,
                )
                req_ids.append(req.req_id)
            self._runs[obj["run_id"]] = req_ids
        elif kind == "decision":
            stored = self._requirements.get(obj["req_id"])
            if stored is not None:
                stored.review = ReviewState(
                    state=ReviewStateKind(obj["state"]),
                    reviewer=obj.get("reviewer"),
                    decided_at=obj.get("decided_at"),
                    note=obj.get("note"),
                )
            if from_log:
                self._decision_lines += 1

    # -- documents ------------------------------------------------------------

    def add_document(self, doc: Document) -> None:
        with self._lock:
            if doc.doc_id in self._documents:
                return
            obj = {
                "rec": "document",
                "doc_id": doc.doc_id,
                "title": doc.title,
                "format": doc.format.value,
                "sections": [
                    {"label": s.section_label, "page": s.page, "body": s.body}
                    for s in doc.sections
                ],
            }
            self._append(obj)
            self._apply(obj)

    def has_document(self, doc_id: str) -> bool:
        return doc_id in self._documents

    def get_document(self, doc_id: str) -> Document:
        try:
            return self._documents[doc_id]
        except KeyError:
            raise StorageError(f"unknown document: {doc_id}") from None

    def list_documents(self) -> list[Document]:
        return list(self._documents.values())

    # -- runs -----------------------------------------------------------------

    def persist_run(
        self,
        document: Document | str,
        merged: Iterable[MergedRequirement],
        run_id: str | None = None,
    ) -> str:
        """Atomically persist one run's requirements, traces and states.

        Everything is validated first and written as a single log record, so
        a failed validation writes nothing. Flagged items start pending;
        everything else is auto-accepted.
        """
        doc_id = document if isinstance(document, str) else document.doc_id
        merged = list(merged)
        with self._lock:
            if doc_id not in self._documents:
                raise OrphanTrace(f"document {doc_id} not stored; ingest it first")
            doc = self._documents[doc_id]
            labels = doc.section_labels()
            if run_id is None:
                digest = hashlib.sha256(
                    ("|".join([doc_id] + sorted(m.req_id for m in merged))).encode()
                ).hexdigest()
                run_id = f"run-{digest[:12]}"
            if run_id in self._runs:
                raise DuplicateRun(f"run {run_id} already persisted")
            for m in merged:
                if m.trace.doc_id != doc_id or m.trace.section_label not in labels:
                    raise OrphanTrace(
                        f"requirement {m.req_id} traces to unknown section "
                        f"({m.trace.doc_id}, {m.trace.section_label!r})"
                    )
                if m.req_id in self._requirements:
                    raise DuplicateRun(
                        f"requirement {m.req_id} already persisted by another run"
                    )

            obj = {
                "rec": "run",
                "run_id": run_id,
                "doc_id": doc_id,
                "requirements": [
                    {
                        **_requirement_to_obj(m),
                        "state": (
                            ReviewStateKind.PENDING_REVIEW
                            if m.flagged_for_review
                            else ReviewStateKind.AUTO_ACCEPTED
                        ).value,
                    }
                    for m in merged
                ],
            }
            self._append(obj)
            self._apply(obj)
            return run_id

    def get_run(self, run_id: str) -> list[StoredRequirement]:
        if run_id not in self._runs:
            raise UnknownRun(f"unknown run: {run_id}")
        return [self._requirements[rid] for rid in self._runs[run_id]]

    def list_runs(self) -> list[str]:
        return list(self._runs)

    # -- review ----------------------------------------------------------------

    def get_requirement(self, req_id: str) -> StoredRequirement:
        try:
            return self._requirements[req_id]
        except KeyError:
            raise UnknownRequirement(f"unknown requirement: {req_id}") from None

    def list_requirements(
        self,
        state: ReviewStateKind | None = None,
        pegs: PegsCategory | None = None,
        run_id: str | None = None,
    ) -> list[StoredRequirement]:
        if run_id is not None:
            items = self.get_run(run_id)
        else:
            items = list(self._requirements.values())
        if state is not None:
            items = [s for s in items if s.review.state is state]
        if pegs is not None:
            items = [s for s in items if s.requirement.pegs is pegs]
        return items

    def decide(
        self,
        req_id: str,
        decision: ReviewStateKind | str,
        reviewer: str,
        note: str | None = None,
    ) -> ReviewState:
        """Record a human accept/reject on a pending requirement.

        Terminal and auto-accepted states are immutable; anything but
        pending -> accepted/rejected raises InvalidTransition.
        """
        decision = ReviewStateKind(decision)
        with self._lock:
            stored = self.get_requirement(req_id)
            current = stored.review.state
            if (current, decision) not in _LEGAL_TRANSITIONS:
                raise InvalidTransition(
                    f"cannot move {req_id} from {current.value} to {decision.value}"
                )
            self._check_backing_file()
            decided_at = _now_iso()
            obj = {
                "rec": "decision",
                "req_id": req_id,
                "state": decision.value,
                "reviewer": reviewer,
                "decided_at": decided_at,
                "note": note,
            }
            self._append(obj)
            self._apply(obj)
            self._decision_lines += 1
            with self.audit_path.open("a", encoding="utf-8") as fh:
                fh.write(
                    f"{decided_at}\t{req_id}\t{decision.value}\t{reviewer}\t{note or ''}\n"
                )
            if self._decision_lines > _COMPACT_AFTER_DECISIONS:
                self.compact()
            return stored.review

    # -- export / trace ----------------------------------------------------------

    def export_final(self, run_id: str, fmt: str = "jsonl") -> str:
        """Final requirement set: auto-accepted and accepted items only.

        Stable ordering by (pegs, req_id); repeated exports of an unchanged
        store are byte-identical. Formats: ``jsonl`` (header record first)
        or ``csv``.
        """
        self._check_backing_file()
        items = [
            s for s in self.get_run(run_id) if s.review.state in _EXPORTABLE
        ]
        pegs_pos = {cat: i for i, cat in enumerate(PEGS_ORDER)}
        items.sort(key=lambda s: (pegs_pos[s.requirement.pegs], s.requirement.req_id))

        rows = []
        for s in items:
            r = s.requirement
            rows.append(
                {
                    "req_id": r.req_id,
                    "text": r.text,
                    "type": r.req_type.value,
                    "pegs": r.pegs.value,
                    "priority": r.priority.value,
                    "category": r.category_label,
                    "confidence": round(r.confidence, 6),
                    "state": s.review.state.value,
                    "doc_id": r.trace.doc_id,
                    "section": r.trace.section_label,
                    "page": r.trace.page,
                }
            )

        if fmt == "jsonl":
            header = {"export": "requirements", "run_id": run_id, "count": len(rows)}
            lines = [json.dumps(header, ensure_ascii=False)]
            lines.extend(json.dumps(row, ensure_ascii=False) for row in rows)
            return "\n".join(lines) + "\n"
        if fmt == "csv":
            buf = io.StringIO()
            writer = csv.DictWriter(buf, fieldnames=EXPORT_FIELDS, lineterminator="\n")
            writer.writeheader()
            writer.writerows(rows)
            return buf.getvalue()
        raise ValueError(f"unknown export format: {fmt}")

    def trace_back(self, req_id: str) -> TraceResult:
        """Resolve a requirement back to its source section text."""
        self._check_backing_file()
        stored = self.get_requirement(req_id)
        trace = stored.requirement.trace
        doc = self._documents.get(trace.doc_id)
        if doc is None:
            raise StorageError(f"document {trace.doc_id} missing from store")
        for section in doc.sections:
            if section.section_label == trace.section_label:
                return TraceResult(
                    excerpt=section.body,
                    section_label=section.section_label,
                    page=section.page,
                )
        raise StorageError(
            f"section {trace.section_label!r} missing from document {trace.doc_id}"
        )

    def flag_stats(self, run_id: str) -> dict:
        items = self.get_run(run_id)
        flagged = sum(1 for s in items if s.requirement.flagged_for_review)
        pending = sum(
            1 for s in items if s.review.state is ReviewStateKind.PENDING_REVIEW
        )
        return {
            "total": len(items),
            "flagged": flagged,
            "pending": pending,
            "flagged_fraction": (flagged / len(items)) if items else 0.0,
        }

    # -- maintenance ---------------------------------------------------------------

    def compact(self) -> None:
        """Rewrite the log with review states folded into their run records.

        The audit log is untouched; it is the permanent decision history.
        """
        with self._lock:
            self._check_backing_file()
            lines = []
            for doc in self._documents.values():
                lines.append(
                    json.dumps(
                        {
                            "rec": "document",
                            "doc_id": doc.doc_id,
                            "title": doc.title,
                            "format": doc.format.value,
                            "sections": [
                                {"label": s.section_label, "page": s.page, "body": s.body}
                                for s in doc.sections
                            ],
                        },
                        ensure_ascii=False,
                    )
                )
            for run_id, req_ids in self._runs.items():
                reqs = []
                for rid in req_ids:
                    stored = self._requirements[rid]
                    obj = _requirement_to_obj(stored.requirement)
                    obj["state"] = stored.review.state.value
                    obj["downstream_ids"] = list(stored.trace_link.downstream_ids)
                    reqs.append(obj)
                lines.append(
                    json.dumps(
                        {
                            "rec": "run",
                            "run_id": run_id,
                            "doc_id": (
                                self._requirements[req_ids[0]].requirement.trace.doc_id
                                if req_ids
                                else ""
                            ),
                            "requirements": reqs,
                        },
                        ensure_ascii=False,
                    )
                )
            tmp = self.path.with_suffix(self.path.suffix + ".tmp")
            tmp.write_text("\n".join(lines) + ("\n" if lines else ""), encoding="utf-8")
            tmp.replace(self.path)
            self._decision_lines = 0
