"""Deterministic mock providers.

The mock completion provider is a pure function of (request content, seed):
identical requests always produce identical responses, so full pipeline runs
on the mock are reproducible at the byte level. Tests can also script
responses per role; scripted entries are consumed FIFO before falling back
to seeded synthesis.
"""

from __future__ import annotations

import hashlib
import json
import re
from collections import deque
from typing import Sequence, Union

import numpy as np

from ..core import EmbeddingVector, UsageRecord
from . import schemas
from .base import (
    ModelRequest,
    ModelRole,
    ProviderResponse,
    TransportError,
)
from .usage import PriceTable

# Flat per-image token charge, roughly in line with vision-model pricing.
IMAGE_TOKENS = 85


def _stable_hash(*parts: bytes) -> int:
    digest = hashlib.sha256(b"\x1f".join(parts)).digest()
    return int.from_bytes(digest[:8], "big")


def _approx_tokens(text: str) -> int:
    return max(1, len(text) // 4)


class ScriptedFailure(Exception):
    """Sentinel scripted into the mock to simulate transport failures."""


class MockCompletionProvider:
    """Scripted/seeded completion provider for every chat-class role."""

    def __init__(self, seed: int = 0):
        self.seed = seed
        self._scripts: dict[ModelRole, deque] = {}

    def script(self, role: ModelRole, *entries) -> None:
        """Queue scripted responses for a role.

        Each entry may be a dict (serialized as the JSON payload), a raw
        string (returned as-is, e.g. to exercise schema failures), or an
        exception instance (raised as a transport failure).
        """
        queue = self._scripts.setdefault(role, deque())
        queue.extend(entries)

    def complete(self, request: ModelRequest) -> ProviderResponse:
        queue = self._scripts.get(request.model_role)
        if queue:
            entry = queue.popleft()
            if isinstance(entry, Exception):
                raise entry
            text = entry if isinstance(entry, str) else json.dumps(entry)
        else:
            text = json.dumps(self._synthesize(request))
        input_tokens = self._input_tokens(request)
        output_tokens = _approx_tokens(text)
        wall_time = round(0.2 + (input_tokens + 3 * output_tokens) / 900.0, 4)
        return ProviderResponse(
            text=text,
            input_tokens=input_tokens,
            output_tokens=output_tokens,
            wall_time=wall_time,
        )

    def _input_tokens(self, request: ModelRequest) -> int:
        tokens = _approx_tokens(request.system_prompt)
        tokens += _approx_tokens(request.text_content())
        tokens += IMAGE_TOKENS * len(request.image_payloads())
        return tokens

    def _fingerprint(self, request: ModelRequest) -> int:
        parts = [
            str(self.seed).encode(),
            request.model_role.value.encode(),
            request.response_schema_id.encode(),
            request.system_prompt.encode(),
            request.text_content().encode(),
        ]
        for payload in request.image_payloads():
            parts.append(hashlib.sha256(payload).digest())
        return _stable_hash(*parts)

    def _synthesize(self, request: ModelRequest) -> dict:
        h = self._fingerprint(request)
        schema_id = request.response_schema_id
        if schema_id == schemas.CRITERIA_SPLIT:
            return _split_criteria_heuristic(request.text_content())
        if schema_id == schemas.GUIDELINES:
            return self._synthesize_guidelines(request, h)
        if schema_id == schemas.RELEVANCE_CRITERION:
            return {
                "patientRelevanceCriterion": "Patient has a diagnosis matching "
                "the condition targeted by the trial"
            }
        if schema_id == schemas.DOMAIN_CLASSIFICATION:
            values = schemas.RESPONSE_SCHEMAS[schema_id]["properties"]["domain"]["enum"]
            return {"domain": values[h % len(values)]}
        if schema_id == schemas.DATA_FORMAT_CLASSIFICATION:
            return {"requested_data_format": ["Structured", "Unstructured"][h % 2]}
        if schema_id == schemas.TEMPORAL_CLASSIFICATION:
            return {"temporal_constraint": ["Yes", "No"][h % 2]}
        if schema_id == schemas.RELEVANCE_CHECK:
            return {
                "relevant": True,
                "rationale": f"Mock relevance check accepted the page ({h % 10_000:04d}).",
            }
        if schema_id == schemas.CRITERION_ASSESSMENT:
            return self._synthesize_assessment(h)
        if schema_id == schemas.RECORD_TYPE:
            values = schemas.RESPONSE_SCHEMAS[schema_id]["properties"]["category"]["enum"]
            return {"category": values[h % len(values)]}
        if schema_id == schemas.VISUAL_ELEMENTS:
            values = schemas.RESPONSE_SCHEMAS[schema_id]["properties"]["visual_elements"][
                "items"
            ]["enum"]
            picked = [v for i, v in enumerate(values) if (h >> i) & 1]
            return {"rationale": f"Mock visual scan ({h % 10_000:04d}).", "visual_elements": picked}
        raise ValueError(f"mock cannot synthesize schema {schema_id!r}")

    def _synthesize_guidelines(self, request: ModelRequest, h: int) -> dict:
        snippet = " ".join(request.text_content().split()[:6]) or "the criterion"
        pool = [
            f"Check clinical notes for mentions of {snippet}",
            f"Review laboratory and diagnostic reports related to {snippet}",
            f"Scan medication lists and treatment plans for {snippet}",
            f"Look at problem lists and medical history sections for {snippet}",
        ]
        return {"guidelines": pool[: (h % 4) + 1]}

    def _synthesize_assessment(self, h: int) -> dict:
        roll = h % 10
        if roll == 9:
            return {
                "rationale": f"The records reviewed do not mention this point ({h % 10_000:04d}).",
                "is_met": False,
                "insufficient_information": True,
            }
        is_met = roll < 5
        word = "meets" if is_met else "does not meet"
        return {
            "rationale": f"The patient {word} the criterion per the pages shown ({h % 10_000:04d}).",
            "is_met": is_met,
            "insufficient_information": False,
        }


_SECTION_RE = re.compile(r"^\s*(inclusion|exclusion)\b.*?:?\s*$", re.IGNORECASE)
_BULLET_RE = re.compile(r"^\s*(?:[-*•]|\(?\d+[.)])\s+(.*)$")


def _split_criteria_heuristic(raw_text: str) -> dict:
    """Deterministic fake criteria splitter used when nothing is scripted.

    Understands the common "Inclusion criteria: / Exclusion criteria:" block
    layout with one bullet or numbered line per criterion; inline
    "Inclusion: ... Exclusion: ..." one-liners fall back to sentence splits.
    """
    criteria = []
    kind = "inclusion"
    for line in raw_text.splitlines():
        if not line.strip():
            continue
        section = _SECTION_RE.match(line)
        if section:
            kind = section.group(1).lower()
            continue
        bullet = _BULLET_RE.match(line)
        text = (bullet.group(1) if bullet else line).strip()
        if text:
            criteria.append(
                {
                    "description": text,
                    "kind": kind,
                    "explanation": f"In plain English: {text}",
                }
            )
    if not criteria:
        # Inline prose: "Inclusion: age >= 18. Exclusion: pregnancy."
        for match in re.finditer(
            r"(inclusion|exclusion)\s*:\s*([^.]+)\.", raw_text, re.IGNORECASE
        ):
            text = match.group(2).strip()
            criteria.append(
                {
                    "description": text,
                    "kind": match.group(1).lower(),
                    "explanation": f"In plain English: {text}",
                }
            )
    if not criteria:
        criteria.append(
            {
                "description": raw_text.strip(),
                "kind": "inclusion",
                "explanation": f"In plain English: {raw_text.strip()}",
            }
        )
    return {"criteria": criteria}


class MockEmbeddingProvider:
    """Seeded hash embedder: unit-norm vector per payload, fully deterministic."""

    def __init__(self, seed: int = 0, dimension: int = 8):
        if dimension < 1:
            raise ValueError("dimension must be >= 1")
        self.seed = seed
        self._dimension = dimension

    @property
    def dimension(self) -> int:
        return self._dimension

    def embed(
        self, items: Sequence[Union[bytes, str]]
    ) -> tuple[list[EmbeddingVector], UsageRecord]:
        vectors = [self._embed_one(item) for item in items]
        input_tokens = sum(
            _approx_tokens(item) if isinstance(item, str) else IMAGE_TOKENS
            for item in items
        )
        usage = UsageRecord(
            input_tokens=input_tokens,
            output_tokens=0,
            wall_time=round(0.05 * len(items), 4),
        )
        return vectors, usage

    def _embed_one(self, item: Union[bytes, str]) -> EmbeddingVector:
        if isinstance(item, str):
            payload = b"text:" + item.encode("utf-8")
        else:
            payload = b"image:" + item
        stream = hashlib.sha256(str(self.seed).encode() + b"|" + payload).digest()
        raw = bytearray()
        counter = 0
        while len(raw) < 4 * self._dimension:
            raw.extend(hashlib.sha256(stream + counter.to_bytes(4, "big")).digest())
            counter += 1
        ints = np.frombuffer(bytes(raw[: 4 * self._dimension]), dtype=">u4").astype(
            np.float64
        )
        values = ints / np.float64(2**32 - 1) * 2.0 - 1.0
        norm = float(np.linalg.norm(values))
        if norm == 0.0:
            values = np.ones(self._dimension) / np.sqrt(self._dimension)
        else:
            values = values / norm
        return EmbeddingVector.of(values)


def make_transport_error(message: str = "scripted transport failure") -> TransportError:
    return TransportError(message)


__all__ = [
    "MockCompletionProvider",
    "MockEmbeddingProvider",
    "PriceTable",
    "make_transport_error",
    "IMAGE_TOKENS",
]
