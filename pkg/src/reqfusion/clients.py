"""Transport clients: scripted mocks and remote HTTP providers.

Every client exposes ``send(prompt_text, chunk_id) -> ProviderResponse`` and
never raises: timeouts, HTTP failures and unparseable replies are encoded in
the response outcome. Scripted mocks replay a configured entry list and
report their scripted delay as latency, so identical scripts reproduce
identical responses run after run.
"""

from __future__ import annotations

import json
import os
import re
import threading
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Protocol

import httpx

from .errors import ConfigError, ParseError
from .ingest import estimate_tokens
from .providers import (
    Outcome,
    ProviderKind,
    ProviderProfile,
    ProviderResponse,
    parse_candidates,
)

# Extra slack allowed on top of a profile timeout before a call is considered
# to have blocked too long.
GRACE_S = 0.1

_ANTHROPIC_VERSION = "2023-06-01"


class ProviderClient(Protocol):
    profile: ProviderProfile

    def send(self, prompt_text: str, chunk_id: str = "") -> ProviderResponse: ...


@dataclass(frozen=True)
class MockScriptEntry:
    delay_ms: int = 0
    status: int = 200
    body: str = ""
    match: str | None = None


class MockScript:
    """Ordered reply script for a mock provider.

    Entries without a ``match`` key replay in order (the last one repeats
    once the script is exhausted). If any entry carries ``match``, selection
    is keyed instead: each request gets the first entry whose match string
    occurs in the prompt, falling back to the first unkeyed entry. Keyed
    scripts are stateless, which keeps concurrent batches deterministic.
    """

    def __init__(self, entries: list[MockScriptEntry]):
        if not entries:
            raise ConfigError("mock script needs at least one entry")
        self.entries = list(entries)
        self._keyed = any(e.match is not None for e in entries)
        self._cursor = 0
        self._lock = threading.Lock()

    @classmethod
    def from_obj(cls, obj) -> "MockScript":
        if isinstance(obj, dict) and "entries" in obj:
            obj = obj["entries"]
        if not isinstance(obj, list):
            raise ConfigError("mock script must be a list of entries")
        entries = []
        for raw in obj:
            if not isinstance(raw, dict):
                raise ConfigError(f"bad mock script entry: {raw!r}")
            body = raw.get("body", "")
            if not isinstance(body, str):
                body = json.dumps(body)
            entries.append(
                MockScriptEntry(
                    delay_ms=int(raw.get("delay_ms", 0)),
                    status=int(raw.get("status", 200)),
                    body=body,
                    match=raw.get("match"),
                )
            )
        return cls(entries)

    @classmethod
    def from_file(cls, path: str | Path) -> "MockScript":
        path = Path(path)
        try:
            return cls.from_obj(json.loads(path.read_text(encoding="utf-8")))
        except FileNotFoundError as exc:
            raise ConfigError(f"mock script not found: {path}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"mock script {path} is not valid JSON: {exc}") from exc

    def select(self, prompt_text: str) -> MockScriptEntry:
        if self._keyed:
            for entry in self.entries:
                if entry.match is not None and entry.match in prompt_text:
                    return entry
            for entry in self.entries:
                if entry.match is None:
                    return entry
            return self.entries[0]
        with self._lock:
            entry = self.entries[min(self._cursor, len(self.entries) - 1)]
            self._cursor += 1
            return entry


class ScriptedMockClient:
    """Deterministic provider stand-in replaying a mock script."""

    def __init__(self, profile: ProviderProfile, script: MockScript):
        self.profile = profile
        self.script = script

    def send(self, prompt_text: str, chunk_id: str = "") -> ProviderResponse:
        entry = self.script.select(prompt_text)
        delay_s = entry.delay_ms / 1000.0
        timeout_s = self.profile.timeout_s
        input_tokens = estimate_tokens(prompt_text)

        if delay_s > timeout_s:
            time.sleep(timeout_s)
            return ProviderResponse(
                provider_id=self.profile.provider_id,
                input_tokens=input_tokens,
                latency_s=timeout_s,
                outcome=Outcome.TIMEOUT,
                error_detail=f"timed out after {timeout_s}s",
            )

        if delay_s:
            time.sleep(delay_s)

        if entry.status != 200:
            return ProviderResponse(
                provider_id=self.profile.provider_id,
                input_tokens=input_tokens,
                latency_s=delay_s,
                outcome=Outcome.HTTP_ERROR,
                status_code=entry.status,
                error_detail=f"HTTP {entry.status}",
            )

        try:
            candidates, dropped = parse_candidates(
                entry.body, self.profile.provider_id, chunk_id
            )
        except ParseError as exc:
            return ProviderResponse(
                provider_id=self.profile.provider_id,
                input_tokens=input_tokens,
                output_tokens=estimate_tokens(entry.body),
                latency_s=delay_s,
                outcome=Outcome.PARSE_ERROR,
                error_detail=str(exc),
            )
        return ProviderResponse(
            provider_id=self.profile.provider_id,
            candidates=candidates,
            input_tokens=input_tokens,
            output_tokens=estimate_tokens(entry.body),
            latency_s=delay_s,
            outcome=Outcome.OK,
            parse_warnings=dropped,
        )


def _env_name(provider_id: str, suffix: str) -> str:
    safe = re.sub(r"[^A-Za-z0-9]", "_", provider_id).upper()
    return f"REQFUSION_{safe}_{suffix}"


def _env_for(profile: ProviderProfile) -> tuple[str | None, str | None]:
    api_key = os.environ.get(_env_name(profile.provider_id, "API_KEY"))
    base_url = profile.base_url or os.environ.get(_env_name(profile.provider_id, "BASE_URL"))
    return api_key, base_url


class _HttpClientBase:
    def __init__(self, profile: ProviderProfile, http: httpx.Client | None = None):
        self.profile = profile
        api_key, base_url = _env_for(profile)
        if not base_url:
            raise ConfigError(
                f"provider {profile.provider_id!r} needs base_url or "
                f"{_env_name(profile.provider_id, 'BASE_URL')}"
            )
        self.base_url = base_url.rstrip("/")
        self.api_key = api_key or ""
        self._http = http or httpx.Client(timeout=profile.timeout_s)

    def _post(self, url: str, headers: dict, payload: dict) -> ProviderResponse | httpx.Response:
        try:
            resp = self._http.post(url, headers=headers, json=payload)
        except httpx.TimeoutException:
            return ProviderResponse(
                provider_id=self.profile.provider_id,
                latency_s=self.profile.timeout_s,
                outcome=Outcome.TIMEOUT,
                error_detail=f"timed out after {self.profile.timeout_s}s",
            )
        except httpx.HTTPError as exc:
            return ProviderResponse(
                provider_id=self.profile.provider_id,
                outcome=Outcome.HTTP_ERROR,
                error_detail=str(exc),
            )
        if resp.status_code != 200:
            return ProviderResponse(
                provider_id=self.profile.provider_id,
                outcome=Outcome.HTTP_ERROR,
                status_code=resp.status_code,
                error_detail=resp.text[:500],
            )
        return resp

    def _finish(
        self,
        content: str,
        chunk_id: str,
        input_tokens: int,
        output_tokens: int,
        latency_s: float,
    ) -> ProviderResponse:
        try:
            candidates, dropped = parse_candidates(
                content, self.profile.provider_id, chunk_id
            )
        except ParseError as exc:
            return ProviderResponse(
                provider_id=self.profile.provider_id,
                input_tokens=input_tokens,
                output_tokens=output_tokens,
                latency_s=latency_s,
                outcome=Outcome.PARSE_ERROR,
                error_detail=str(exc),
            )
        return ProviderResponse(
            provider_id=self.profile.provider_id,
            candidates=candidates,
            input_tokens=input_tokens,
            output_tokens=output_tokens,
            latency_s=latency_s,
            outcome=Outcome.OK,
            parse_warnings=dropped,
        )


class OpenAICompatClient(_HttpClientBase):
    """Chat-completions client for OpenAI-compatible endpoints (incl. Groq)."""

    def send(self, prompt_text: str, chunk_id: str = "") -> ProviderResponse:
        start = time.perf_counter()
        result = self._post(
            f"{self.base_url}/v1/chat/completions",
            headers={"Authorization": f"Bearer {self.api_key}"},
            payload={
                "model": self.profile.model or "gpt-4",
                "messages": [{"role": "user", "content": prompt_text}],
            },
        )
        if isinstance(result, ProviderResponse):
            return result
        latency = time.perf_counter() - start
        try:
            data = result.json()
            content = data["choices"][0]["message"]["content"]
        except (ValueError, KeyError, IndexError, TypeError):
            return ProviderResponse(
                provider_id=self.profile.provider_id,
                latency_s=latency,
                outcome=Outcome.PARSE_ERROR,
                error_detail="malformed chat-completions payload",
            )
        usage = data.get("usage") or {}
        return self._finish(
            content,
            chunk_id,
            int(usage.get("prompt_tokens", estimate_tokens(prompt_text))),
            int(usage.get("completion_tokens", estimate_tokens(content))),
            latency,
        )


class AnthropicStyleClient(_HttpClientBase):
    """Messages-API client following the vendor's header conventions."""

    def send(self, prompt_text: str, chunk_id: str = "") -> ProviderResponse:
        start = time.perf_counter()
        result = self._post(
            f"{self.base_url}/v1/messages",
            headers={"x-api-key": self.api_key, "anthropic-version": _ANTHROPIC_VERSION},
            payload={
                "model": self.profile.model or "claude-3-sonnet",
                "max_tokens": 4096,
                "messages": [{"role": "user", "content": prompt_text}],
            },
        )
        if isinstance(result, ProviderResponse):
            return result
        latency = time.perf_counter() - start
        try:
            data = result.json()
            content = "".join(
                block.get("text", "") for block in data["content"] if block.get("type") == "text"
            )
        except (ValueError, KeyError, TypeError):
            return ProviderResponse(
                provider_id=self.profile.provider_id,
                latency_s=latency,
                outcome=Outcome.PARSE_ERROR,
                error_detail="malformed messages payload",
            )
        usage = data.get("usage") or {}
        return self._finish(
            content,
            chunk_id,
            int(usage.get("input_tokens", estimate_tokens(prompt_text))),
            int(usage.get("output_tokens", estimate_tokens(content))),
            latency,
        )


def build_client(profile: ProviderProfile, http: httpx.Client | None = None) -> ProviderClient:
    if profile.kind is ProviderKind.SCRIPTED_MOCK:
        if not profile.script_path:
            raise ConfigError(f"mock provider {profile.provider_id!r} needs script_path")
        return ScriptedMockClient(profile, MockScript.from_file(profile.script_path))
    if profile.kind is ProviderKind.OPENAI_COMPATIBLE:
        return OpenAICompatClient(profile, http)
    return AnthropicStyleClient(profile, http)


def build_clients(profiles: list[ProviderProfile]) -> dict[str, ProviderClient]:
    return {p.provider_id: build_client(p) for p in profiles if p.enabled}
