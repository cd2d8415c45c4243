"""Gateway orchestration: validation-with-repair, backoff, limits, logging."""

from __future__ import annotations

import io
import json
import threading
import time
from dataclasses import dataclass, field
from typing import Callable, Mapping, Optional, Sequence, Union

import jsonschema
from PIL import Image, UnidentifiedImageError

from ..core import EmbeddingVector, UsageRecord
from .base import (
    CompletionProvider,
    EmbeddingProvider,
    GatewayError,
    ModelRequest,
    ModelRole,
    ProviderRejection,
    RateLimitError,
    SchemaValidationExhausted,
    TextPart,
    TransportError,
)
from .schemas import RESPONSE_SCHEMAS
from .usage import PriceTable, UsageEntry, UsageLog, utcnow


@dataclass(frozen=True)
class RetryPolicy:
    max_validation_retries: int = 3
    max_transport_attempts: int = 3
    backoff_base: float = 0.5
    backoff_max: float = 30.0

    def backoff_delay(self, attempt: int) -> float:
        return min(self.backoff_base * (2**attempt), self.backoff_max)


class TokenBucket:
    """Simple thread-safe token bucket; ``None`` rate means unlimited."""

    def __init__(self, rate_per_second: Optional[float], clock=time.monotonic, sleeper=time.sleep):
        self.rate = rate_per_second
        self.capacity = rate_per_second or 0.0
        self.tokens = self.capacity
        self.updated = clock()
        self._clock = clock
        self._sleep = sleeper
        self._lock = threading.Lock()

    def acquire(self) -> None:
        if not self.rate:
            return
        while True:
            with self._lock:
                now = self._clock()
                self.tokens = min(self.capacity, self.tokens + (now - self.updated) * self.rate)
                self.updated = now
                if self.tokens >= 1.0:
                    self.tokens -= 1.0
                    return
                wait = (1.0 - self.tokens) / self.rate
            self._sleep(wait)


@dataclass(frozen=True)
class StructuredCompletion:
    payload: dict
    usage: UsageRecord
    retry_count: int
    attempts: int


@dataclass(frozen=True)
class EmbeddingBatch:
    """Order-preserving embedding results; failed items hold ``None``."""

    vectors: list[Optional[EmbeddingVector]]
    failures: list[tuple[int, str]]
    usage: UsageRecord

    def ok_vectors(self) -> list[EmbeddingVector]:
        return [v for v in self.vectors if v is not None]


def _extract_json(text: str) -> dict:
    """Parse a JSON object out of completion text, tolerating code fences."""
    candidate = text.strip()
    if candidate.startswith("```"):
        first_newline = candidate.find("\n")
        candidate = candidate[first_newline + 1 :] if first_newline >= 0 else candidate
        if candidate.rstrip().endswith("```"):
            candidate = candidate.rstrip()[:-3]
    parsed = json.loads(candidate)
    if not isinstance(parsed, dict):
        raise ValueError("top-level JSON value must be an object")
    return parsed


@dataclass
class Gateway:
    """Uniform access to completion and embedding providers.

    Shareable across threads: a semaphore caps in-flight provider calls and
    an optional token bucket rate-limits them; usage log appends are atomic.
    """

    completion_providers: Mapping[ModelRole, CompletionProvider]
    embedding_provider: EmbeddingProvider
    price_table: PriceTable = field(default_factory=PriceTable)
    usage_log: UsageLog = field(default_factory=UsageLog)
    retry_policy: RetryPolicy = field(default_factory=RetryPolicy)
    max_concurrency: int = 4
    requests_per_second: Optional[float] = None
    sleeper: Callable[[float], None] = time.sleep
    schemas: Mapping[str, dict] = field(default_factory=lambda: RESPONSE_SCHEMAS)

    def __post_init__(self):
        self._limiter = threading.Semaphore(self.max_concurrency)
        self._bucket = TokenBucket(self.requests_per_second, sleeper=self.sleeper)

    # -- completion ---------------------------------------------------------

    def complete_structured(
        self, request: ModelRequest, context: str = ""
    ) -> StructuredCompletion:
        """Run a completion and validate its JSON against the named schema.

        Validation failures are repaired with bounded retries: the validation
        error is appended to the prompt and the call re-issued. Transport
        failures back off exponentially up to the configured attempt budget.
        """
        schema = self.schemas.get(request.response_schema_id)
        if schema is None:
            raise GatewayError(f"unregistered response schema {request.response_schema_id!r}")

        total_usage = UsageRecord()
        attempts = 0
        current = request
        last_error = ""
        for validation_round in range(self.retry_policy.max_validation_retries + 1):
            response, transport_attempts = self._call_with_backoff(current)
            attempts += transport_attempts
            total_usage = total_usage + UsageRecord(
                input_tokens=response.input_tokens,
                output_tokens=response.output_tokens,
                wall_time=response.wall_time,
                cost=self.price_table.cost(
                    request.model_role, response.input_tokens, response.output_tokens
                ),
            )
            try:
                payload = _extract_json(response.text)
                jsonschema.validate(payload, schema)
            except (ValueError, jsonschema.ValidationError) as exc:
                last_error = str(exc).splitlines()[0]
                current = self._with_repair_note(request, last_error)
                continue
            self._log(request.model_role, total_usage, attempts, validation_round, context)
            return StructuredCompletion(
                payload=payload,
                usage=total_usage,
                retry_count=validation_round,
                attempts=attempts,
            )
        self._log(
            request.model_role,
            total_usage,
            attempts,
            self.retry_policy.max_validation_retries,
            context or "schema-exhausted",
        )
        raise SchemaValidationExhausted(request.response_schema_id, last_error, attempts)

    def _with_repair_note(self, request: ModelRequest, error: str) -> ModelRequest:
        note = TextPart(
            "Your previous response failed validation: "
            f"{error}. Respond again with ONLY a JSON object matching the required format."
        )
        return ModelRequest(
            model_role=request.model_role,
            system_prompt=request.system_prompt,
            user_parts=request.user_parts + (note,),
            response_schema_id=request.response_schema_id,
            deterministic=request.deterministic,
        )

    def _call_with_backoff(self, request: ModelRequest):
        provider = self.completion_providers.get(request.model_role)
        if provider is None:
            raise GatewayError(f"no provider configured for role {request.model_role.value}")
        last_exc: Optional[Exception] = None
        for attempt in range(self.retry_policy.max_transport_attempts):
            self._bucket.acquire()
            with self._limiter:
                try:
                    return provider.complete(request), attempt + 1
                except RateLimitError as exc:
                    last_exc = exc
                except TransportError as exc:
                    last_exc = exc
                except ProviderRejection:
                    raise
            if attempt < self.retry_policy.max_transport_attempts - 1:
                self.sleeper(self.retry_policy.backoff_delay(attempt))
        raise TransportError(
            f"provider for {request.model_role.value} failed after "
            f"{self.retry_policy.max_transport_attempts} attempts: {last_exc}"
        )

    # -- embeddings ---------------------------------------------------------

    def embed_images(self, pages: Sequence[bytes], context: str = "") -> EmbeddingBatch:
        """Embed raster page images; undecodable items fail individually."""
        if not pages:
            raise ValueError("embed_images requires a non-empty list of pages")
        failures: list[tuple[int, str]] = []
        good: list[tuple[int, bytes]] = []
        for index, payload in enumerate(pages):
            try:
                with Image.open(io.BytesIO(payload)) as img:
                    img.verify()
                good.append((index, payload))
            except (UnidentifiedImageError, OSError, ValueError) as exc:
                failures.append((index, f"undecodable image: {exc}"))
        return self._embed([p for _, p in good], [i for i, _ in good], failures, len(pages), context)

    def embed_texts(self, texts: Sequence[str], context: str = "") -> EmbeddingBatch:
        """Embed query texts with the same multimodal embedder."""
        if not texts:
            raise ValueError("embed_texts requires a non-empty list of texts")
        indices = list(range(len(texts)))
        return self._embed(list(texts), indices, [], len(texts), context)

    def _embed(
        self,
        items: list[Union[bytes, str]],
        indices: list[int],
        failures: list[tuple[int, str]],
        total: int,
        context: str,
    ) -> EmbeddingBatch:
        vectors: list[Optional[EmbeddingVector]] = [None] * total
        usage = UsageRecord()
        if items:
            self._bucket.acquire()
            with self._limiter:
                try:
                    embedded, usage = self.embedding_provider.embed(items)
                except (TransportError, RateLimitError):
                    raise
            if len(embedded) != len(items):
                raise GatewayError(
                    f"embedder returned {len(embedded)} vectors for {len(items)} inputs"
                )
            dims = {v.dimension for v in embedded}
            if len(dims) > 1:
                raise GatewayError(f"embedder returned mixed dimensions {sorted(dims)}")
            for index, vector in zip(indices, embedded):
                vectors[index] = vector
            cost = self.price_table.cost(
                ModelRole.EMBEDDER, usage.input_tokens, usage.output_tokens
            )
            usage = UsageRecord(
                input_tokens=usage.input_tokens,
                output_tokens=usage.output_tokens,
                wall_time=usage.wall_time,
                cost=cost,
            )
            self._log(ModelRole.EMBEDDER, usage, 1, 0, context)
        return EmbeddingBatch(vectors=vectors, failures=failures, usage=usage)

    # -- accounting ---------------------------------------------------------

    def _log(
        self,
        role: ModelRole,
        usage: UsageRecord,
        attempts: int,
        retry_count: int,
        context: str,
    ) -> None:
        self.usage_log.append(
            UsageEntry(
                timestamp=utcnow(),
                model_role=role,
                usage=usage,
                attempts=attempts,
                retry_count=retry_count,
                context=context,
            )
        )
