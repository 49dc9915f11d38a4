"""Extraction prompt construction.

Two modes: category-guided prompts (one per Project/Environment/Goals/System
focus) and a single generic prompt per chunk. Chunk text is always inserted
verbatim between sentinel markers so instructions and source text cannot be
confused.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from pathlib import Path

from .errors import ConfigError
from .ingest import Chunk
from .types import PEGS_ORDER, PegsCategory

SCHEMA_VERSION = "schema_v1"

DOC_OPEN = "<<<DOC"
DOC_CLOSE = "DOC>>>"

# Focus description per category, keyed to the taxonomy's published rows.
PEGS_FOCUS: dict[PegsCategory, str] = {
    PegsCategory.PROJECT: "Stakeholders, constraints (budget, timeline), organizational context",
    PegsCategory.ENVIRONMENT: "External interfaces, regulatory constraints, operational conditions",
    PegsCategory.GOALS: "Business objectives, success criteria, user expectations",
    PegsCategory.SYSTEM: "Functional specs, non-functional requirements, quality attributes",
}

GENERIC_INSTRUCTION = (
    "Extract all functional and non-functional requirements from this document."
)

SCHEMA_BLOCK = """\
Respond with a JSON array only. Each element must be an object with fields:
"text" (the requirement statement, at least 10 characters),
"type" ("functional" or "non-functional"),
"pegs" ("project", "environment", "goals" or "system"),
"priority" ("high", "medium" or "low"),
"category" (a short free-form label),
"confidence" (a number between 0 and 1).
Return [] if the text contains no requirements."""

_DEFAULT_PEGS_TEMPLATE = f"""\
You are a requirements analyst. Identify requirements concerning: {{focus}}. \
Report only items present in the text.
Category: {{category}}.
{{schema}}
{DOC_OPEN}
{{chunk}}
{DOC_CLOSE}"""

_DEFAULT_GENERIC_TEMPLATE = f"""\
You are a requirements analyst. {GENERIC_INSTRUCTION} \
Report only items present in the text.
{{schema}}
{DOC_OPEN}
{{chunk}}
{DOC_CLOSE}"""


class PromptMode(str, Enum):
    PEGS_GUIDED = "pegs"
    GENERIC = "generic"


@dataclass(frozen=True)
class PromptSpec:
    prompt_id: str
    mode: PromptMode
    category: PegsCategory | None
    chunk_id: str
    rendered: str


class PromptTemplates:
    """Prompt templates, either the built-in defaults or a directory override.

    An override directory may contain ``pegs.txt`` and/or ``generic.txt``
    using ``{focus}``, ``{category}``, ``{chunk}`` and ``{schema}``
    placeholders.
    """

    def __init__(self, pegs: str | None = None, generic: str | None = None):
        self.pegs = pegs or _DEFAULT_PEGS_TEMPLATE
        self.generic = generic or _DEFAULT_GENERIC_TEMPLATE

    @classmethod
    def from_dir(cls, directory: str | Path) -> "PromptTemplates":
        directory = Path(directory)
        if not directory.is_dir():
            raise ConfigError(f"prompt template directory not found: {directory}")

        def read(name: str) -> str | None:
            path = directory / name
            return path.read_text(encoding="utf-8") if path.is_file() else None

        return cls(pegs=read("pegs.txt"), generic=read("generic.txt"))

    def render(self, template: str, **values: str) -> str:
        try:
            return template.format(**values)
        except (KeyError, IndexError) as exc:
            raise ConfigError(f"prompt template uses unknown placeholder: {exc}") from exc


def build_pegs_prompt(
    category: PegsCategory,
    chunk: Chunk,
    templates: PromptTemplates | None = None,
) -> PromptSpec:
    """Render the category-guided prompt for one chunk."""
    if not chunk.text:
        raise ValueError("chunk text must be non-empty")
    templates = templates or PromptTemplates()
    rendered = templates.render(
        templates.pegs,
        focus=PEGS_FOCUS[category],
        category=category.label,
        schema=SCHEMA_BLOCK,
        chunk=chunk.text,
    )
    return PromptSpec(
        prompt_id=f"{chunk.chunk_id}|pegs|{category.value}",
        mode=PromptMode.PEGS_GUIDED,
        category=category,
        chunk_id=chunk.chunk_id,
        rendered=rendered,
    )


def build_generic_prompt(
    chunk: Chunk,
    templates: PromptTemplates | None = None,
) -> PromptSpec:
    """Render the generic extraction prompt for one chunk."""
    if not chunk.text:
        raise ValueError("chunk text must be non-empty")
    templates = templates or PromptTemplates()
    rendered = templates.render(
        templates.generic,
        schema=SCHEMA_BLOCK,
        chunk=chunk.text,
    )
    return PromptSpec(
        prompt_id=f"{chunk.chunk_id}|generic",
        mode=PromptMode.GENERIC,
        category=None,
        chunk_id=chunk.chunk_id,
        rendered=rendered,
    )


def plan_prompts(
    chunks: list[Chunk],
    mode: PromptMode,
    templates: PromptTemplates | None = None,
) -> list[PromptSpec]:
    """Fan a chunk list out into prompts.

    Category-guided mode yields four prompts per chunk, one per category in
    canonical order; generic mode yields one. Order is chunk order first.
    """
    templates = templates or PromptTemplates()
    prompts: list[PromptSpec] = []
    for chunk in chunks:
        if mode is PromptMode.PEGS_GUIDED:
            for category in PEGS_ORDER:
                prompts.append(build_pegs_prompt(category, chunk, templates))
        else:
            prompts.append(build_generic_prompt(chunk, templates))
    return prompts
