"""Multi-provider requirements extraction with consensus verification.

Pipeline: ingest documents into traceable chunks, fan prompts out to a set
of completion providers, deduplicate and score the candidates by weighted
consensus, flag low-confidence items for human review, persist everything
with source traceability, and evaluate against ground truth.
"""

from .consensus import (
    DEDUP_THRESHOLD,
    FLAG_THRESHOLD,
    MergedRequirement,
    cluster_candidates,
    consensus_confidence,
    cosine,
    embed_default,
    flag_rate,
    merge,
)
from .errors import ReqFusionError
from .ingest import (
    Chunk,
    Document,
    DocumentFormat,
    Section,
    chunk_document,
    complexity_score,
    estimate_tokens,
    load_document,
)
from .orchestrator import (
    BatchResult,
    Mode,
    OrchestrationPlan,
    RunRecord,
    execute_plan,
    route_provider_subset,
    run_parallel,
    run_sequential,
)
from .prompting import (
    GENERIC_INSTRUCTION,
    PEGS_FOCUS,
    PromptMode,
    PromptSpec,
    build_generic_prompt,
    build_pegs_prompt,
    plan_prompts,
)
from .providers import (
    CandidateRequirement,
    Outcome,
    ProviderKind,
    ProviderProfile,
    ProviderResponse,
    parse_candidates,
    response_cost,
)
from .store import RequirementStore, ReviewStateKind
from .types import PEGS_ORDER, PegsCategory, Priority, ReqType

__version__ = "0.1.0"

__all__ = [
    "BatchResult",
    "CandidateRequirement",
    "Chunk",
    "DEDUP_THRESHOLD",
    "Document",
    "DocumentFormat",
    "FLAG_THRESHOLD",
    "GENERIC_INSTRUCTION",
    "MergedRequirement",
    "Mode",
    "OrchestrationPlan",
    "Outcome",
    "PEGS_FOCUS",
    "PEGS_ORDER",
    "PegsCategory",
    "Priority",
    "PromptMode",
    "PromptSpec",
    "ProviderKind",
    "ProviderProfile",
    "ProviderResponse",
    "ReqFusionError",
    "ReqType",
    "RequirementStore",
    "ReviewStateKind",
    "RunRecord",
    "Section",
    "build_generic_prompt",
    "build_pegs_prompt",
    "chunk_document",
    "cluster_candidates",
    "complexity_score",
    "consensus_confidence",
    "cosine",
    "embed_default",
    "estimate_tokens",
    "execute_plan",
    "flag_rate",
    "load_document",
    "merge",
    "parse_candidates",
    "plan_prompts",
    "response_cost",
    "route_provider_subset",
    "run_parallel",
    "run_sequential",
]
