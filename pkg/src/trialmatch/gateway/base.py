"""Provider-facing request/response types and error taxonomy."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Protocol, Sequence, Union

from ..core import EmbeddingVector, UsageRecord


class ModelRole(Enum):
    SPLITTER = "Splitter"
    GUIDELINE_GEN = "GuidelineGen"
    RELEVANCE_GEN = "RelevanceGen"
    CLASSIFIER = "Classifier"
    RELEVANCE_CHECK = "RelevanceCheck"
    ASSESSOR = "Assessor"
    EMBEDDER = "Embedder"


# Only these roles may receive page images. The Classifier doubles as the
# page classifier for corpus profiling, which sees page images; criterion
# facet classification and the Splitter stay text-only.
IMAGE_CAPABLE_ROLES = frozenset(
    {ModelRole.ASSESSOR, ModelRole.RELEVANCE_CHECK, ModelRole.CLASSIFIER}
)


@dataclass(frozen=True)
class TextPart:
    text: str


@dataclass(frozen=True)
class ImagePart:
    image_bytes: bytes


Part = Union[TextPart, ImagePart]


@dataclass(frozen=True)
class ModelRequest:
    """One completion request routed to the provider configured for a role."""

    model_role: ModelRole
    system_prompt: str
    user_parts: tuple[Part, ...]
    response_schema_id: str
    deterministic: bool = True

    def __post_init__(self):
        if self.model_role not in IMAGE_CAPABLE_ROLES and any(
            isinstance(p, ImagePart) for p in self.user_parts
        ):
            raise ValueError(
                f"role {self.model_role.value} is text-only and cannot take images"
            )

    def text_content(self) -> str:
        return "\n".join(p.text for p in self.user_parts if isinstance(p, TextPart))

    def image_payloads(self) -> list[bytes]:
        return [p.image_bytes for p in self.user_parts if isinstance(p, ImagePart)]


@dataclass(frozen=True)
class ProviderResponse:
    """Raw completion text plus the provider's own accounting."""

    text: str
    input_tokens: int
    output_tokens: int
    wall_time: float


class GatewayError(Exception):
    """Base class for gateway failures."""


class TransportError(GatewayError):
    """Network or provider-side failure worth retrying."""


class RateLimitError(TransportError):
    """Provider signalled throttling; retried with backoff."""


class ProviderRejection(GatewayError):
    """Non-retryable provider error (bad request, auth, ...)."""


class SchemaValidationExhausted(GatewayError):
    """Model kept returning payloads that failed schema validation."""

    def __init__(self, schema_id: str, last_error: str, attempts: int):
        super().__init__(
            f"response never validated against schema {schema_id!r} "
            f"after {attempts} attempts: {last_error}"
        )
        self.schema_id = schema_id
        self.last_error = last_error
        self.attempts = attempts


class CompletionProvider(Protocol):
    def complete(self, request: ModelRequest) -> ProviderResponse: ...


class EmbeddingProvider(Protocol):
    def embed(self, items: Sequence[Union[bytes, str]]) -> tuple[list[EmbeddingVector], UsageRecord]: ...

    @property
    def dimension(self) -> int: ...
