"""Execution of prompt plans across the provider set.

Parallel mode queries every enabled provider at once and keeps one response
per provider, failures included. Sequential mode walks the failover chain
and stops at the first response that is both successful and confident
enough. Batch execution runs prompts through a bounded worker pool and
never lets one poisoned prompt abort the rest.
"""

from __future__ import annotations

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from enum import Enum
from typing import Mapping, Sequence

from .clients import ProviderClient
from .errors import AllProvidersFailed
from .prompting import PromptSpec
from .providers import (
    ProviderProfile,
    ProviderResponse,
    mean_self_confidence,
    response_cost,
    validate_failover_ranks,
)

DEFAULT_FAILOVER_CONFIDENCE = 0.6
DEFAULT_MAX_IN_FLIGHT = 8
DEFAULT_COMPLEXITY_CUTOFF = 0.3


class Mode(str, Enum):
    PARALLEL = "parallel"
    SEQUENTIAL = "sequential"


@dataclass
class OrchestrationPlan:
    mode: Mode
    providers: list[ProviderProfile]
    low_confidence_failover_threshold: float = DEFAULT_FAILOVER_CONFIDENCE
    cost_routing: bool = False
    complexity_cutoff: float = DEFAULT_COMPLEXITY_CUTOFF
    max_in_flight: int = DEFAULT_MAX_IN_FLIGHT

    def __post_init__(self):
        if not self.enabled_providers():
            raise ValueError("plan needs at least one enabled provider")
        validate_failover_ranks(self.providers)
        if not 0.0 <= self.low_confidence_failover_threshold <= 1.0:
            raise ValueError("failover threshold must be in [0, 1]")
        if self.max_in_flight < 1:
            raise ValueError("max_in_flight must be >= 1")

    def enabled_providers(self) -> list[ProviderProfile]:
        return sorted(
            (p for p in self.providers if p.enabled), key=lambda p: p.failover_rank
        )


@dataclass
class RunRecord:
    """Outcome of one prompt against the provider set."""

    prompt_id: str
    per_provider: list[ProviderResponse]
    wall_latency_s: float
    mode_used: Mode
    failovers_taken: int = 0
    accepted_provider_id: str | None = None
    failed: bool = False

    def ok_responses(self) -> list[ProviderResponse]:
        return [r for r in self.per_provider if r.ok]

    def accepted_responses(self) -> list[ProviderResponse]:
        """Responses whose candidates count for merging.

        Parallel keeps every successful provider; sequential keeps only the
        response the failover chain accepted.
        """
        if self.mode_used is Mode.PARALLEL:
            return self.ok_responses()
        return [
            r for r in self.per_provider if r.provider_id == self.accepted_provider_id
        ]


def run_parallel(
    plan: OrchestrationPlan,
    prompt: PromptSpec,
    clients: Mapping[str, ProviderClient],
    providers: Sequence[ProviderProfile] | None = None,
) -> RunRecord:
    """Query all enabled providers concurrently for one prompt.

    The record carries one response per provider in failover order; raises
    AllProvidersFailed (record attached) when nothing succeeded.
    """
    profiles = list(providers) if providers is not None else plan.enabled_providers()
    start = time.perf_counter()
    with ThreadPoolExecutor(max_workers=len(profiles)) as pool:
        futures = [
            pool.submit(clients[p.provider_id].send, prompt.rendered, prompt.chunk_id)
            for p in profiles
        ]
        responses = [f.result() for f in futures]
    wall = time.perf_counter() - start

    record = RunRecord(
        prompt_id=prompt.prompt_id,
        per_provider=responses,
        wall_latency_s=wall,
        mode_used=Mode.PARALLEL,
    )
    if not record.ok_responses():
        record.failed = True
        raise AllProvidersFailed(
            f"all {len(profiles)} providers failed for prompt {prompt.prompt_id}",
            record=record,
        )
    return record


def run_sequential(
    plan: OrchestrationPlan,
    prompt: PromptSpec,
    clients: Mapping[str, ProviderClient],
    providers: Sequence[ProviderProfile] | None = None,
) -> RunRecord:
    """Walk the failover chain until a provider answers acceptably.

    A response is acceptable when it succeeded and its candidates' mean
    self-confidence is not below the plan threshold (an empty candidate
    list is acceptable: finding nothing is a valid answer).
    """
    profiles = list(providers) if providers is not None else plan.enabled_providers()
    threshold = plan.low_confidence_failover_threshold
    start = time.perf_counter()
    attempts: list[ProviderResponse] = []
    accepted: str | None = None
    for profile in profiles:
        response = clients[profile.provider_id].send(prompt.rendered, prompt.chunk_id)
        attempts.append(response)
        if not response.ok:
            continue
        mean = mean_self_confidence(response.candidates)
        if mean is not None and mean < threshold:
            continue
        accepted = profile.provider_id
        break
    wall = time.perf_counter() - start

    record = RunRecord(
        prompt_id=prompt.prompt_id,
        per_provider=attempts,
        wall_latency_s=wall,
        mode_used=Mode.SEQUENTIAL,
        failovers_taken=len(attempts) - 1,
        accepted_provider_id=accepted,
    )
    if accepted is None:
        record.failed = True
        raise AllProvidersFailed(
            f"failover chain exhausted for prompt {prompt.prompt_id}", record=record
        )
    return record


def route_provider_subset(
    plan: OrchestrationPlan, doc_complexity: float
) -> list[ProviderProfile]:
    """Cost routing: simple documents go to the cheapest provider only.

    Below the complexity cutoff, returns the single provider with the lowest
    input-token rate (ties break by provider id); otherwise the full enabled
    set.
    """
    enabled = plan.enabled_providers()
    if doc_complexity >= plan.complexity_cutoff:
        return enabled
    cheapest = min(enabled, key=lambda p: (p.input_cost_per_1k_tokens, p.provider_id))
    return [cheapest]


@dataclass
class BatchResult:
    records: list[RunRecord]
    total_cost_usd: float
    wall_latency_s: float
    failed_prompts: int = 0

    @property
    def all_failed(self) -> bool:
        return bool(self.records) and self.failed_prompts == len(self.records)


def execute_plan(
    plan: OrchestrationPlan,
    prompts: Sequence[PromptSpec],
    clients: Mapping[str, ProviderClient],
    providers: Sequence[ProviderProfile] | None = None,
) -> BatchResult:
    """Run a prompt plan with bounded concurrency.

    Records come back in prompt order regardless of completion order.
    Prompts whose providers all failed stay in the list as failed records;
    the batch always completes.
    """
    if not prompts:
        raise ValueError("prompts must be non-empty")
    profiles = list(providers) if providers is not None else plan.enabled_providers()
    runner = run_parallel if plan.mode is Mode.PARALLEL else run_sequential

    def run_one(prompt: PromptSpec) -> RunRecord:
        try:
            return runner(plan, prompt, clients, profiles)
        except AllProvidersFailed as exc:
            return exc.record

    start = time.perf_counter()
    with ThreadPoolExecutor(max_workers=plan.max_in_flight) as pool:
        records = list(pool.map(run_one, prompts))
    wall = time.perf_counter() - start

    by_id = {p.provider_id: p for p in plan.providers}
    total_cost = 0.0
    for record in records:
        for response in record.per_provider:
            profile = by_id.get(response.provider_id)
            if profile is not None:
                total_cost += response_cost(response, profile)

    return BatchResult(
        records=records,
        total_cost_usd=round(total_cost, 6),
        wall_latency_s=wall,
        failed_prompts=sum(1 for r in records if r.failed),
    )
