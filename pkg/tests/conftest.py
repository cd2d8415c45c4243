from __future__ import annotations

import io
from typing import Optional, Sequence, Union

import pytest
from PIL import Image

from trialmatch.core import EmbeddingVector, UsageRecord
from trialmatch.gateway import (
    Gateway,
    MockCompletionProvider,
    MockEmbeddingProvider,
    ModelRole,
    PriceTable,
    RetryPolicy,
    UsageLog,
)


def tiny_png(color=(200, 200, 200), size=(32, 32)) -> bytes:
    buffer = io.BytesIO()
    Image.new("RGB", size, color).save(buffer, format="PNG")
    return buffer.getvalue()


class MappedEmbedder:
    """Test embedder returning caller-chosen vectors per text/bytes key."""

    def __init__(self, mapping: dict, dimension: int, default=None):
        self.mapping = mapping
        self._dimension = dimension
        self.default = default

    @property
    def dimension(self) -> int:
        return self._dimension

    def embed(
        self, items: Sequence[Union[bytes, str]]
    ) -> tuple[list[EmbeddingVector], UsageRecord]:
        vectors = []
        for item in items:
            key = item if isinstance(item, str) else bytes(item)
            values = self.mapping.get(key, self.default)
            if values is None:
                raise KeyError(f"no mapped embedding for {key!r}")
            vectors.append(EmbeddingVector.of(values))
        return vectors, UsageRecord(input_tokens=10 * len(items), wall_time=0.01)


def make_gateway(
    seed: int = 0,
    dimension: int = 8,
    prices: Optional[dict] = None,
    retry: Optional[RetryPolicy] = None,
    embedder=None,
    usage_log: Optional[UsageLog] = None,
) -> tuple[Gateway, MockCompletionProvider]:
    mock = MockCompletionProvider(seed=seed)
    gateway = Gateway(
        completion_providers={
            role: mock for role in ModelRole if role is not ModelRole.EMBEDDER
        },
        embedding_provider=embedder
        or MockEmbeddingProvider(seed=seed, dimension=dimension),
        price_table=PriceTable.from_mapping(prices or {}),
        usage_log=usage_log or UsageLog(),
        retry_policy=retry or RetryPolicy(backoff_base=0.0),
        sleeper=lambda seconds: None,
    )
    return gateway, mock


@pytest.fixture
def mock_gateway():
    gateway, mock = make_gateway()
    return gateway, mock
