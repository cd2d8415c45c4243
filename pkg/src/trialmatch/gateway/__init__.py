from .base import (
    GatewayError,
    ImagePart,
    ModelRequest,
    ModelRole,
    Part,
    ProviderRejection,
    ProviderResponse,
    RateLimitError,
    SchemaValidationExhausted,
    TextPart,
    TransportError,
)
from .config import GatewayConfig, build_gateway, scripted_mock
from .gateway import EmbeddingBatch, Gateway, RetryPolicy, StructuredCompletion, TokenBucket
from .mock import MockCompletionProvider, MockEmbeddingProvider
from .schemas import RESPONSE_SCHEMAS
from .usage import (
    Distribution,
    PriceTable,
    RolePrice,
    UsageAggregate,
    UsageEntry,
    UsageLog,
    usage_totals,
    utcnow,
)

__all__ = [
    "Distribution",
    "EmbeddingBatch",
    "Gateway",
    "GatewayConfig",
    "GatewayError",
    "ImagePart",
    "MockCompletionProvider",
    "MockEmbeddingProvider",
    "ModelRequest",
    "ModelRole",
    "Part",
    "PriceTable",
    "ProviderRejection",
    "ProviderResponse",
    "RESPONSE_SCHEMAS",
    "RateLimitError",
    "RetryPolicy",
    "RolePrice",
    "SchemaValidationExhausted",
    "StructuredCompletion",
    "TextPart",
    "TokenBucket",
    "TransportError",
    "UsageAggregate",
    "UsageEntry",
    "UsageLog",
    "build_gateway",
    "scripted_mock",
    "usage_totals",
    "utcnow",
]
