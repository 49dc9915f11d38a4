from __future__ import annotations

from pathlib import Path

import pytest

from reqfusion.ingest import Chunk
from reqfusion.providers import (
    CandidateRequirement,
    ProviderKind,
    ProviderProfile,
)
from reqfusion.types import PegsCategory, Priority, ReqType

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture
def fixtures_dir() -> Path:
    return FIXTURES


@pytest.fixture
def profiles3() -> list[ProviderProfile]:
    """Three equal-weight mock providers in failover order."""
    return [
        ProviderProfile(
            provider_id=name,
            kind=ProviderKind.SCRIPTED_MOCK,
            weight=1.0,
            input_cost_per_1k_tokens=rate_in,
            output_cost_per_1k_tokens=rate_out,
            timeout_s=5.0,
            failover_rank=rank,
        )
        for rank, (name, rate_in, rate_out) in enumerate(
            [("alpha", 0.03, 0.06), ("bravo", 0.003, 0.015), ("charlie", 0.0006, 0.0006)]
        )
    ]


def make_chunk(
    text: str = "The supplier shall deliver the platform.",
    chunk_id: str = "doc-x:s000:c000",
    doc_id: str = "doc-x",
    section_label: str = "Scope",
    page: int = 1,
) -> Chunk:
    return Chunk(
        chunk_id=chunk_id,
        doc_id=doc_id,
        section_label=section_label,
        page=page,
        text=text,
        token_estimate=(len(text) + 3) // 4,
    )


def make_candidate(
    text: str,
    provider_id: str = "alpha",
    pegs: PegsCategory = PegsCategory.SYSTEM,
    req_type: ReqType = ReqType.FUNCTIONAL,
    priority: Priority = Priority.MEDIUM,
    category: str = "Business Logic",
    confidence: float = 0.8,
    chunk_id: str = "doc-x:s000:c000",
) -> CandidateRequirement:
    return CandidateRequirement(
        text=text,
        req_type=req_type,
        pegs=pegs,
        priority=priority,
        category_label=category,
        self_confidence=confidence,
        provider_id=provider_id,
        chunk_id=chunk_id,
    )
