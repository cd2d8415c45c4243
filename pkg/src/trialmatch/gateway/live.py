"""Live HTTP providers (chat-completions-style JSON APIs).

Endpoints, model names and auth-token environment variable names come from
the per-role gateway configuration. The request/response shapes follow the
widely adopted chat-completions and embeddings conventions.
"""

from __future__ import annotations

import base64
import os
import time
from typing import Optional, Sequence, Union

import httpx

from ..core import EmbeddingVector, UsageRecord
from .base import (
    ImagePart,
    ModelRequest,
    ProviderRejection,
    ProviderResponse,
    RateLimitError,
    TextPart,
    TransportError,
)


def _auth_headers(api_key_env: Optional[str]) -> dict:
    headers = {"Content-Type": "application/json"}
    if api_key_env:
        token = os.environ.get(api_key_env)
        if not token:
            raise ProviderRejection(f"environment variable {api_key_env} is not set")
        headers["Authorization"] = f"Bearer {token}"
    return headers


def _raise_for_status(response: httpx.Response) -> None:
    if response.status_code == 429:
        raise RateLimitError(f"rate limited: {response.text[:200]}")
    if response.status_code >= 500:
        raise TransportError(f"server error {response.status_code}: {response.text[:200]}")
    if response.status_code >= 400:
        raise ProviderRejection(f"request rejected {response.status_code}: {response.text[:200]}")


class LiveCompletionProvider:
    """JSON-over-HTTP chat completions client for one role."""

    def __init__(
        self,
        endpoint: str,
        model: str,
        api_key_env: Optional[str] = None,
        timeout: float = 120.0,
        client: Optional[httpx.Client] = None,
    ):
        self.endpoint = endpoint.rstrip("/")
        self.model = model
        self.api_key_env = api_key_env
        self._client = client or httpx.Client(timeout=timeout)

    def complete(self, request: ModelRequest) -> ProviderResponse:
        content: list[dict] = []
        for part in request.user_parts:
            if isinstance(part, TextPart):
                content.append({"type": "text", "text": part.text})
            elif isinstance(part, ImagePart):
                encoded = base64.b64encode(part.image_bytes).decode("ascii")
                content.append(
                    {
                        "type": "image_url",
                        "image_url": {"url": f"data:image/png;base64,{encoded}"},
                    }
                )
        body = {
            "model": self.model,
            "messages": [
                {"role": "system", "content": request.system_prompt},
                {"role": "user", "content": content},
            ],
            "response_format": {"type": "json_object"},
        }
        if request.deterministic:
            # Best effort only; not every provider honors sampling controls.
            body["temperature"] = 0
        started = time.monotonic()
        try:
            response = self._client.post(
                f"{self.endpoint}/chat/completions",
                json=body,
                headers=_auth_headers(self.api_key_env),
            )
        except httpx.HTTPError as exc:
            raise TransportError(f"transport failure: {exc}")
        _raise_for_status(response)
        elapsed = time.monotonic() - started
        data = response.json()
        try:
            text = data["choices"][0]["message"]["content"]
        except (KeyError, IndexError, TypeError):
            raise TransportError("malformed completion response body")
        usage = data.get("usage", {})
        return ProviderResponse(
            text=text,
            input_tokens=int(usage.get("prompt_tokens", 0)),
            output_tokens=int(usage.get("completion_tokens", 0)),
            wall_time=elapsed,
        )


class LiveEmbeddingProvider:
    """JSON-over-HTTP multimodal embeddings client."""

    def __init__(
        self,
        endpoint: str,
        model: str,
        dimension: int,
        api_key_env: Optional[str] = None,
        timeout: float = 120.0,
        client: Optional[httpx.Client] = None,
    ):
        self.endpoint = endpoint.rstrip("/")
        self.model = model
        self.api_key_env = api_key_env
        self._dimension = dimension
        self._client = client or httpx.Client(timeout=timeout)

    @property
    def dimension(self) -> int:
        return self._dimension

    def embed(
        self, items: Sequence[Union[bytes, str]]
    ) -> tuple[list[EmbeddingVector], UsageRecord]:
        inputs = []
        for item in items:
            if isinstance(item, str):
                inputs.append({"type": "text", "text": item})
            else:
                inputs.append(
                    {
                        "type": "image_base64",
                        "data": base64.b64encode(item).decode("ascii"),
                    }
                )
        started = time.monotonic()
        try:
            response = self._client.post(
                f"{self.endpoint}/embeddings",
                json={"model": self.model, "input": inputs},
                headers=_auth_headers(self.api_key_env),
            )
        except httpx.HTTPError as exc:
            raise TransportError(f"transport failure: {exc}")
        _raise_for_status(response)
        elapsed = time.monotonic() - started
        data = response.json()
        try:
            vectors = [EmbeddingVector.of(row["embedding"]) for row in data["data"]]
        except (KeyError, TypeError):
            raise TransportError("malformed embeddings response body")
        usage = data.get("usage", {})
        return vectors, UsageRecord(
            input_tokens=int(usage.get("prompt_tokens", usage.get("total_tokens", 0))),
            output_tokens=0,
            wall_time=elapsed,
        )
