"""Run configuration: providers, mode, thresholds, store location.

Loaded from a JSON file (``--config`` flag or REQFUSION_CONFIG); provider
API keys and base URLs may also come from REQFUSION_<ID>_API_KEY /
REQFUSION_<ID>_BASE_URL environment variables.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from pathlib import Path

from .consensus import DEDUP_THRESHOLD, FLAG_THRESHOLD
from .errors import ConfigError
from .orchestrator import (
    DEFAULT_COMPLEXITY_CUTOFF,
    DEFAULT_FAILOVER_CONFIDENCE,
    DEFAULT_MAX_IN_FLIGHT,
    Mode,
)
from .prompting import PromptMode
from .providers import ProviderKind, ProviderProfile, validate_failover_ranks

DEFAULT_MAX_TOKENS = 1200
DEFAULT_STORE = "reqfusion.store.jsonl"


@dataclass
class Thresholds:
    dedup: float = DEDUP_THRESHOLD
    flag: float = FLAG_THRESHOLD
    failover: float = DEFAULT_FAILOVER_CONFIDENCE

    def validate(self) -> None:
        for name in ("dedup", "flag", "failover"):
            value = getattr(self, name)
            if not 0.0 < value < 1.0:
                raise ConfigError(f"threshold {name} must be in (0, 1), got {value}")


@dataclass
class RunConfig:
    providers: list[ProviderProfile]
    mode: Mode = Mode.PARALLEL
    prompt_mode: PromptMode = PromptMode.PEGS_GUIDED
    thresholds: Thresholds = field(default_factory=Thresholds)
    max_tokens: int = DEFAULT_MAX_TOKENS
    store_path: str = DEFAULT_STORE
    auth_token: str = ""
    max_in_flight: int = DEFAULT_MAX_IN_FLIGHT
    cost_routing: bool = False
    complexity_cutoff: float = DEFAULT_COMPLEXITY_CUTOFF
    prompt_dir: str | None = None

    def validate(self) -> None:
        if not self.providers:
            raise ConfigError("config needs at least one provider")
        if not any(p.enabled for p in self.providers):
            raise ConfigError("config needs at least one enabled provider")
        try:
            validate_failover_ranks(self.providers)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        self.thresholds.validate()
        if self.max_tokens < 64:
            raise ConfigError(f"max_tokens must be >= 64, got {self.max_tokens}")
        if self.max_in_flight < 1:
            raise ConfigError("max_in_flight must be >= 1")
        if not 0.0 <= self.complexity_cutoff <= 1.0:
            raise ConfigError("complexity_cutoff must be in [0, 1]")


def _provider_from_obj(obj: dict, base_dir: Path) -> ProviderProfile:
    try:
        kind = ProviderKind(obj["kind"])
        provider_id = str(obj["provider_id"])
    except (KeyError, ValueError) as exc:
        raise ConfigError(f"bad provider entry {obj!r}: {exc}") from exc
    script = obj.get("script")
    if script is not None and not os.path.isabs(script):
        script = str(base_dir / script)
    try:
        return ProviderProfile(
            provider_id=provider_id,
            kind=kind,
            weight=float(obj.get("weight", 1.0)),
            input_cost_per_1k_tokens=float(obj.get("input_cost_per_1k_tokens", 0.0)),
            output_cost_per_1k_tokens=float(obj.get("output_cost_per_1k_tokens", 0.0)),
            timeout_s=float(obj.get("timeout_s", 30.0)),
            failover_rank=int(obj.get("failover_rank", 0)),
            enabled=bool(obj.get("enabled", True)),
            model=obj.get("model"),
            base_url=obj.get("base_url"),
            script_path=script,
        )
    except ValueError as exc:
        raise ConfigError(f"provider {provider_id!r}: {exc}") from exc


def config_from_obj(obj: dict, base_dir: Path | None = None) -> RunConfig:
    base_dir = base_dir or Path.cwd()
    if not isinstance(obj, dict):
        raise ConfigError("config root must be an object")
    providers = [_provider_from_obj(p, base_dir) for p in obj.get("providers", [])]

    thr = obj.get("thresholds", {})
    try:
        thresholds = Thresholds(
            dedup=float(thr.get("dedup", DEDUP_THRESHOLD)),
            flag=float(thr.get("flag", FLAG_THRESHOLD)),
            failover=float(thr.get("failover", DEFAULT_FAILOVER_CONFIDENCE)),
        )
        config = RunConfig(
            providers=providers,
            mode=Mode(obj.get("mode", Mode.PARALLEL.value)),
            prompt_mode=PromptMode(obj.get("prompt_mode", PromptMode.PEGS_GUIDED.value)),
            thresholds=thresholds,
            max_tokens=int(obj.get("max_tokens", DEFAULT_MAX_TOKENS)),
            store_path=str(
                obj.get("store", os.environ.get("REQFUSION_STORE", DEFAULT_STORE))
            ),
            auth_token=str(obj.get("auth_token", "")),
            max_in_flight=int(obj.get("max_in_flight", DEFAULT_MAX_IN_FLIGHT)),
            cost_routing=bool(obj.get("cost_routing", False)),
            complexity_cutoff=float(obj.get("complexity_cutoff", DEFAULT_COMPLEXITY_CUTOFF)),
            prompt_dir=obj.get("prompt_dir"),
        )
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad config value: {exc}") from exc
    config.validate()
    return config


def load_config(path: str | Path) -> RunConfig:
    path = Path(path)
    try:
        obj = json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    return config_from_obj(obj, base_dir=path.parent)
