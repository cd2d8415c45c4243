"""Declarative gateway configuration (YAML).

Example::

    provider:
      mode: mock            # mock | live
      seed: 42
      embedding_dimension: 8
    pricing:
      default:  {input_per_million: "2.5",  output_per_million: "10"}
      Assessor: {input_per_million: "15",   output_per_million: "60"}
      Embedder: {input_per_million: "0.12", output_per_million: "0"}
    retry:
      max_validation_retries: 3
      max_transport_attempts: 3
      backoff_base: 0.5
    concurrency:
      max_in_flight: 4
      requests_per_second: null
    roles:                  # live mode only
      Assessor:
        endpoint: https://api.example.com/v1
        model: reasoning-model-large
        api_key_env: TRIALMATCH_API_KEY
      Embedder:
        endpoint: https://api.example.com/v1
        model: multimodal-embed-3
        api_key_env: TRIALMATCH_API_KEY
        dimension: 1024
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import yaml

from .base import ModelRole
from .gateway import Gateway, RetryPolicy
from .live import LiveCompletionProvider, LiveEmbeddingProvider
from .mock import MockCompletionProvider, MockEmbeddingProvider
from .usage import PriceTable, UsageLog


@dataclass(frozen=True)
class RoleEndpoint:
    endpoint: str
    model: str
    api_key_env: Optional[str] = None
    dimension: Optional[int] = None


@dataclass(frozen=True)
class GatewayConfig:
    mode: str = "mock"
    seed: int = 0
    embedding_dimension: int = 8
    pricing: dict = field(default_factory=dict)
    retry: RetryPolicy = field(default_factory=RetryPolicy)
    max_in_flight: int = 4
    requests_per_second: Optional[float] = None
    roles: dict[str, RoleEndpoint] = field(default_factory=dict)

    @classmethod
    def from_dict(cls, raw: dict) -> "GatewayConfig":
        provider = raw.get("provider", {}) or {}
        retry_raw = raw.get("retry", {}) or {}
        concurrency = raw.get("concurrency", {}) or {}
        roles = {}
        for name, entry in (raw.get("roles") or {}).items():
            roles[name] = RoleEndpoint(
                endpoint=entry["endpoint"],
                model=entry["model"],
                api_key_env=entry.get("api_key_env"),
                dimension=entry.get("dimension"),
            )
        mode = provider.get("mode", "mock")
        if mode not in ("mock", "live"):
            raise ValueError(f"provider.mode must be 'mock' or 'live', got {mode!r}")
        rps = concurrency.get("requests_per_second")
        return cls(
            mode=mode,
            seed=int(provider.get("seed", 0)),
            embedding_dimension=int(provider.get("embedding_dimension", 8)),
            pricing=raw.get("pricing", {}) or {},
            retry=RetryPolicy(
                max_validation_retries=int(retry_raw.get("max_validation_retries", 3)),
                max_transport_attempts=int(retry_raw.get("max_transport_attempts", 3)),
                backoff_base=float(retry_raw.get("backoff_base", 0.5)),
                backoff_max=float(retry_raw.get("backoff_max", 30.0)),
            ),
            max_in_flight=int(concurrency.get("max_in_flight", 4)),
            requests_per_second=float(rps) if rps else None,
            roles=roles,
        )

    @classmethod
    def load(cls, path) -> "GatewayConfig":
        with open(path, "r", encoding="utf-8") as fh:
            raw = yaml.safe_load(fh) or {}
        return cls.from_dict(raw)


def build_gateway(config: GatewayConfig, usage_log_path: Optional[Path] = None) -> Gateway:
    """Construct a ready-to-use Gateway from configuration."""
    chat_roles = [role for role in ModelRole if role is not ModelRole.EMBEDDER]
    if config.mode == "mock":
        mock = MockCompletionProvider(seed=config.seed)
        completion = {role: mock for role in chat_roles}
        embedder = MockEmbeddingProvider(
            seed=config.seed, dimension=config.embedding_dimension
        )
    else:
        completion = {}
        for role in chat_roles:
            entry = config.roles.get(role.value) or config.roles.get("default")
            if entry is None:
                raise ValueError(f"live mode: no endpoint configured for role {role.value}")
            completion[role] = LiveCompletionProvider(
                endpoint=entry.endpoint, model=entry.model, api_key_env=entry.api_key_env
            )
        embed_entry = config.roles.get(ModelRole.EMBEDDER.value)
        if embed_entry is None:
            raise ValueError("live mode: no endpoint configured for role Embedder")
        embedder = LiveEmbeddingProvider(
            endpoint=embed_entry.endpoint,
            model=embed_entry.model,
            dimension=embed_entry.dimension or config.embedding_dimension,
            api_key_env=embed_entry.api_key_env,
        )
    return Gateway(
        completion_providers=completion,
        embedding_provider=embedder,
        price_table=PriceTable.from_mapping(config.pricing),
        usage_log=UsageLog(usage_log_path),
        retry_policy=config.retry,
        max_concurrency=config.max_in_flight,
        requests_per_second=config.requests_per_second,
    )


def scripted_mock(gateway: Gateway) -> MockCompletionProvider:
    """Return the underlying mock provider for scripting (mock mode only)."""
    provider = gateway.completion_providers.get(ModelRole.ASSESSOR)
    if not isinstance(provider, MockCompletionProvider):
        raise TypeError("gateway is not running on the mock provider")
    return provider
