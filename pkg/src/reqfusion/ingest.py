"""Document loading, sectioning and chunking.

Documents come in as Markdown, plain text, or pre-extracted text with a
sidecar section manifest. Each section carries a label and a page number so
every downstream requirement stays traceable to its origin.
"""

from __future__ import annotations

import hashlib
import json
import math
import re
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Mapping, Sequence

from .errors import DecodeError, EmptyDocument, ManifestMismatch

CHARS_PER_TOKEN = 4

_HEADING_RE = re.compile(r"^(#{1,6})\s+(.+?)\s*#*\s*$")
_WORD_RE = re.compile(r"\w+", re.UNICODE)


class DocumentFormat(str, Enum):
    PLAIN_TEXT = "plain_text"
    MARKDOWN = "markdown"
    PRE_EXTRACTED = "pre_extracted"


@dataclass(frozen=True)
class Section:
    """One labeled slice of a document with its page number."""

    section_label: str
    page: int
    body: str


@dataclass(frozen=True)
class Document:
    doc_id: str
    title: str
    format: DocumentFormat
    sections: tuple[Section, ...]

    def full_text(self) -> str:
        return "\n\n".join(s.body for s in self.sections)

    def section_labels(self) -> set[str]:
        return {s.section_label for s in self.sections}


@dataclass(frozen=True)
class Chunk:
    """Provider-sized piece of a section, carrying its provenance."""

    chunk_id: str
    doc_id: str
    section_label: str
    page: int
    text: str
    token_estimate: int


def estimate_tokens(text: str) -> int:
    """Default provider-agnostic token estimate: ceil(chars / 4)."""
    return math.ceil(len(text) / CHARS_PER_TOKEN)


def _decode(source: bytes | str) -> str:
    if isinstance(source, str):
        return source
    try:
        return source.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise DecodeError(f"input is not valid UTF-8: {exc}") from exc


def _unique_labels(labels: Iterable[str]) -> list[str]:
    """Disambiguate repeated labels so (doc_id, label) resolves uniquely."""
    seen: dict[str, int] = {}
    out = []
    for label in labels:
        count = seen.get(label, 0) + 1
        seen[label] = count
        out.append(label if count == 1 else f"{label} ({count})")
    return out


def _parse_manifest(manifest) -> list[dict]:
    if manifest is None:
        raise ManifestMismatch("pre-extracted input requires a section manifest")
    if isinstance(manifest, (bytes, str)):
        try:
            manifest = json.loads(manifest)
        except json.JSONDecodeError as exc:
            raise ManifestMismatch(f"manifest is not valid JSON: {exc}") from exc
    if isinstance(manifest, Mapping) and "sections" in manifest:
        manifest = manifest["sections"]
    if not isinstance(manifest, Sequence) or isinstance(manifest, (bytes, str)):
        raise ManifestMismatch("manifest must be a list of section entries")
    return list(manifest)


def _sections_from_markdown(text: str, manifest) -> list[Section]:
    page_overrides: dict[str, int] = {}
    if manifest is not None:
        for entry in _parse_manifest(manifest):
            if "label" in entry and "page" in entry:
                page_overrides[str(entry["label"])] = int(entry["page"])

    raw: list[tuple[str, int, list[str]]] = []  # (label, heading level, lines)
    preamble: list[str] = []
    for line in text.splitlines():
        m = _HEADING_RE.match(line)
        if m:
            raw.append((m.group(2), len(m.group(1)), []))
        elif raw:
            raw[-1][2].append(line)
        else:
            preamble.append(line)

    sections: list[tuple[str, int, str]] = []
    page = 1
    if any(line.strip() for line in preamble):
        sections.append(("§0", page, "\n".join(preamble).strip()))
    for label, level, lines in raw:
        if level == 1 and sections:
            page += 1
        sections.append((label, page, "\n".join(lines).strip()))

    labels = _unique_labels(label for label, _, _ in sections)
    return [
        Section(label, page_overrides.get(label, page), body)
        for label, (_, page, body) in zip(labels, sections)
    ]


def _sections_from_plain(text: str) -> list[Section]:
    segments = text.split("\f")
    sections = []
    for idx, segment in enumerate(segments, start=1):
        body = segment.strip()
        if body:
            sections.append(Section(f"§{idx}", idx, body))
    return sections


def _sections_from_manifest(raw: bytes, manifest) -> list[Section]:
    entries = _parse_manifest(manifest)
    parsed: list[tuple[int, str, int, int]] = []
    for entry in entries:
        try:
            label = str(entry["label"])
            page = int(entry["page"])
            start = int(entry["start"])
            end = int(entry["end"])
        except (KeyError, TypeError, ValueError) as exc:
            raise ManifestMismatch(f"bad manifest entry {entry!r}") from exc
        if page < 1:
            raise ManifestMismatch(f"page must be >= 1, got {page}")
        if not (0 <= start <= end <= len(raw)):
            raise ManifestMismatch(
                f"offsets [{start}, {end}) outside document of {len(raw)} bytes"
            )
        parsed.append((start, label, page, end))

    parsed.sort(key=lambda item: item[0])
    pages = [page for _, _, page, _ in parsed]
    if pages != sorted(pages):
        raise ManifestMismatch("pages must be non-decreasing in offset order")

    labels = _unique_labels(label for _, label, _, _ in parsed)
    sections = []
    for label, (start, _, page, end) in zip(labels, parsed):
        try:
            body = raw[start:end].decode("utf-8")
        except UnicodeDecodeError as exc:
            raise ManifestMismatch(
                f"offsets [{start}, {end}) split a UTF-8 sequence"
            ) from exc
        sections.append(Section(label, page, body.strip()))
    return sections


def load_document(
    source: bytes | str,
    format: DocumentFormat | str,
    title: str,
    *,
    manifest=None,
    doc_id: str | None = None,
) -> Document:
    """Decode and section a document.

    Markdown headings start sections (page counter advances per top-level
    heading, manifest ``page`` entries override). Plain text splits on
    form-feed page breaks. Pre-extracted text requires a manifest of byte
    offsets. ``manifest`` accepts a parsed list, a JSON string, or bytes.
    """
    fmt = DocumentFormat(format)
    text = _decode(source)
    if not text.strip():
        raise EmptyDocument(f"document {title!r} has no content")

    if fmt is DocumentFormat.MARKDOWN:
        sections = _sections_from_markdown(text, manifest)
    elif fmt is DocumentFormat.PLAIN_TEXT:
        sections = _sections_from_plain(text)
    else:
        raw = source if isinstance(source, bytes) else text.encode("utf-8")
        sections = _sections_from_manifest(raw, manifest)

    if not sections:
        raise EmptyDocument(f"document {title!r} yielded no sections")

    if doc_id is None:
        digest = hashlib.sha256(
            b"\x00".join((title.encode("utf-8"), fmt.value.encode(), text.encode("utf-8")))
        ).hexdigest()
        doc_id = f"doc-{digest[:16]}"
    return Document(doc_id=doc_id, title=title, format=fmt, sections=tuple(sections))


def _split_paragraphs(body: str) -> list[str]:
    return [p for p in re.split(r"\n\s*\n", body) if p.strip()]


def _split_sentences(paragraph: str) -> list[str]:
    return [s for s in re.split(r"(?<=[.!?])\s+", paragraph) if s.strip()]


def _hard_cut(text: str, max_tokens: int) -> list[str]:
    width = max_tokens * CHARS_PER_TOKEN
    return [text[i : i + width] for i in range(0, len(text), width)]


def _pack(units: list[str], sep: str, max_tokens: int, split_unit) -> list[str]:
    """Greedy packing of units into chunks under the token budget."""
    pieces: list[str] = []
    current = ""
    for unit in units:
        if estimate_tokens(unit) > max_tokens:
            if current:
                pieces.append(current)
                current = ""
            pieces.extend(split_unit(unit))
            continue
        candidate = f"{current}{sep}{unit}" if current else unit
        if estimate_tokens(candidate) > max_tokens and current:
            pieces.append(current)
            current = unit
        else:
            current = candidate
    if current:
        pieces.append(current)
    return pieces


def chunk_document(doc: Document, max_tokens: int) -> list[Chunk]:
    """Split a document into chunks of at most ``max_tokens`` each.

    Paragraph boundaries are preferred, then sentence boundaries, then a
    hard character cut. Joining a section's chunk texts reproduces the
    section body up to boundary whitespace.
    """
    if max_tokens < 64:
        raise ValueError(f"max_tokens must be >= 64, got {max_tokens}")

    def split_sentence_unit(sentence: str) -> list[str]:
        return _hard_cut(sentence, max_tokens)

    def split_paragraph_unit(paragraph: str) -> list[str]:
        return _pack(_split_sentences(paragraph), " ", max_tokens, split_sentence_unit)

    chunks: list[Chunk] = []
    for si, section in enumerate(doc.sections):
        body = section.body.strip()
        if not body:
            continue
        if estimate_tokens(body) <= max_tokens:
            texts = [body]
        else:
            texts = _pack(_split_paragraphs(body), "\n\n", max_tokens, split_paragraph_unit)
        for ci, text in enumerate(texts):
            chunks.append(
                Chunk(
                    chunk_id=f"{doc.doc_id}:s{si:03d}:c{ci:03d}",
                    doc_id=doc.doc_id,
                    section_label=section.section_label,
                    page=section.page,
                    text=text,
                    token_estimate=estimate_tokens(text),
                )
            )
    return chunks


def complexity_score(doc: Document) -> float:
    """Blend of document length and lexical diversity, clamped to [0, 1].

    score = 0.5 * min(total_tokens / 20000, 1) + 0.5 * type_token_ratio,
    over lowercased word tokens. Used to route simple documents to the
    cheapest provider.
    """
    words = _WORD_RE.findall(doc.full_text().lower())
    if not words:
        return 0.0
    length_part = min(len(words) / 20000.0, 1.0)
    ratio = len(set(words)) / len(words)
    return max(0.0, min(0.5 * length_part + 0.5 * ratio, 1.0))
