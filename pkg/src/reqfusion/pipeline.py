"""The extraction pipeline shared by the CLI and the HTTP service.

ingest -> prompt plan -> provider execution -> consensus merge -> persist.
Both entry points run exactly this code, so their outputs agree byte for
byte on the same store.
"""

from __future__ import annotations

from dataclasses import dataclass

from . import consensus
from .clients import ProviderClient, build_clients
from .config import RunConfig
from .ingest import Chunk, Document, chunk_document, complexity_score
from .orchestrator import (
    BatchResult,
    Mode,
    OrchestrationPlan,
    execute_plan,
    route_provider_subset,
)
from .prompting import PromptTemplates, plan_prompts
from .store import RequirementStore


@dataclass
class ExtractionOutcome:
    doc: Document
    chunks: list[Chunk]
    batch: BatchResult
    merged: list[consensus.MergedRequirement]
    run_id: str | None
    complexity: float


def build_plan(config: RunConfig) -> OrchestrationPlan:
    return OrchestrationPlan(
        mode=config.mode,
        providers=config.providers,
        low_confidence_failover_threshold=config.thresholds.failover,
        cost_routing=config.cost_routing,
        complexity_cutoff=config.complexity_cutoff,
        max_in_flight=config.max_in_flight,
    )


def consensus_scope(plan: OrchestrationPlan, batch: BatchResult):
    """Providers whose absence should count against confidence.

    Parallel mode treats every enabled provider as an expected voice.
    Sequential mode is a cost path, not a consensus vote: only providers the
    failover chain actually accepted define the confidence denominator.
    """
    if plan.mode is Mode.PARALLEL:
        return plan.enabled_providers()
    accepted = {
        record.accepted_provider_id
        for record in batch.records
        if record.accepted_provider_id
    }
    scoped = [p for p in plan.enabled_providers() if p.provider_id in accepted]
    return scoped or plan.enabled_providers()


def run_extraction(
    config: RunConfig,
    doc: Document,
    store: RequirementStore | None = None,
    clients: dict[str, ProviderClient] | None = None,
    run_id: str | None = None,
) -> ExtractionOutcome:
    """Extract, merge and optionally persist one document.

    A batch where every prompt failed is returned unpersisted with an empty
    merged list; partial provider failures merge whatever succeeded.
    """
    plan = build_plan(config)
    clients = clients if clients is not None else build_clients(config.providers)

    templates = (
        PromptTemplates.from_dir(config.prompt_dir) if config.prompt_dir else None
    )
    chunks = chunk_document(doc, config.max_tokens)
    prompts = plan_prompts(chunks, config.prompt_mode, templates)
    complexity = complexity_score(doc)

    providers = None
    if plan.cost_routing:
        providers = route_provider_subset(plan, complexity)

    if not prompts:
        batch = BatchResult(records=[], total_cost_usd=0.0, wall_latency_s=0.0)
        return ExtractionOutcome(doc, chunks, batch, [], None, complexity)

    batch = execute_plan(plan, prompts, clients, providers)
    if batch.all_failed:
        return ExtractionOutcome(doc, chunks, batch, [], None, complexity)

    chunk_map = {c.chunk_id: c for c in chunks}
    scope = providers if providers is not None else consensus_scope(plan, batch)
    merged = consensus.merge(
        batch.records,
        scope,
        chunk_map,
        threshold=config.thresholds.dedup,
        flag_threshold=config.thresholds.flag,
    )

    persisted_run_id = None
    if store is not None:
        store.add_document(doc)
        persisted_run_id = store.persist_run(doc, merged, run_id=run_id)

    return ExtractionOutcome(doc, chunks, batch, merged, persisted_run_id, complexity)


def summarize(outcome: ExtractionOutcome) -> dict:
    """Run summary: counts, type split, flags and cost."""
    merged = outcome.merged
    total = len(merged)
    functional = sum(1 for m in merged if m.req_type.value == "functional")
    non_functional = total - functional
    flagged = sum(1 for m in merged if m.flagged_for_review)
    return {
        "doc_id": outcome.doc.doc_id,
        "run_id": outcome.run_id,
        "chunks": len(outcome.chunks),
        "prompts": len(outcome.batch.records),
        "failed_prompts": outcome.batch.failed_prompts,
        "total": total,
        "functional": functional,
        "non_functional": non_functional,
        "functional_pct": round(100.0 * functional / total, 1) if total else 0.0,
        "non_functional_pct": round(100.0 * non_functional / total, 1) if total else 0.0,
        "flagged": flagged,
        "total_cost_usd": outcome.batch.total_cost_usd,
        "wall_s": round(outcome.batch.wall_latency_s, 3),
        "complexity": round(outcome.complexity, 3),
    }
