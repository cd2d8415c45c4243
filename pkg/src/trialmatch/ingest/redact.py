"""Pluggable page redaction.

De-identification is a boundary interface: an external command or HTTP
endpoint that takes a PNG and returns a PNG of identical dimensions. The
default passthrough policy leaves pages untouched and marks them
``redacted=False`` for desk-scale runs.
"""

from __future__ import annotations

import io
import subprocess
from dataclasses import dataclass, replace
from typing import Callable, Optional, Protocol

import httpx
from PIL import Image

from ..core import RecordPage

PASSTHROUGH = "passthrough"
PLUGIN = "plugin"


class RedactionError(Exception):
    """Plugin failure; the caller quarantines the page and continues."""


class RedactorPlugin(Protocol):
    def redact(self, png_bytes: bytes) -> bytes: ...

    def describe(self) -> str: ...


class CommandRedactor:
    """Pipe the page PNG through an external command (stdin -> stdout)."""

    def __init__(self, command: list[str], timeout: float = 120.0):
        self.command = command
        self.timeout = timeout

    def redact(self, png_bytes: bytes) -> bytes:
        try:
            result = subprocess.run(
                self.command,
                input=png_bytes,
                capture_output=True,
                timeout=self.timeout,
                check=True,
            )
        except (subprocess.CalledProcessError, subprocess.TimeoutExpired, OSError) as exc:
            raise RedactionError(f"redactor command failed: {exc}")
        return result.stdout

    def describe(self) -> str:
        return f"command:{' '.join(self.command)}"


class HttpRedactor:
    """POST the page PNG to an HTTP endpoint returning the redacted PNG."""

    def __init__(self, endpoint: str, timeout: float = 120.0, client: Optional[httpx.Client] = None):
        self.endpoint = endpoint
        self._client = client or httpx.Client(timeout=timeout)

    def redact(self, png_bytes: bytes) -> bytes:
        try:
            response = self._client.post(
                self.endpoint, content=png_bytes, headers={"Content-Type": "image/png"}
            )
            response.raise_for_status()
        except httpx.HTTPError as exc:
            raise RedactionError(f"redactor endpoint failed: {exc}")
        return response.content

    def describe(self) -> str:
        return f"http:{self.endpoint}"


class CallableRedactor:
    """Wrap a plain function as a plugin (used by tests and embedding callers)."""

    def __init__(self, fn: Callable[[bytes], bytes], name: str = "callable"):
        self._fn = fn
        self._name = name

    def redact(self, png_bytes: bytes) -> bytes:
        try:
            return self._fn(png_bytes)
        except Exception as exc:
            raise RedactionError(f"redactor callable failed: {exc}")

    def describe(self) -> str:
        return f"callable:{self._name}"


@dataclass(frozen=True)
class RedactionPolicy:
    mode: str = PASSTHROUGH
    plugin: Optional[RedactorPlugin] = None

    def __post_init__(self):
        if self.mode not in (PASSTHROUGH, PLUGIN):
            raise ValueError(f"unknown redaction mode {self.mode!r}")
        if self.mode == PLUGIN and self.plugin is None:
            raise ValueError("plugin mode requires a plugin")

    @classmethod
    def passthrough(cls) -> "RedactionPolicy":
        return cls(mode=PASSTHROUGH)

    @classmethod
    def from_spec(cls, spec: Optional[str]) -> "RedactionPolicy":
        """Build a policy from a CLI spec: ``passthrough``, ``http:URL`` or ``command:...``."""
        if not spec or spec == PASSTHROUGH:
            return cls.passthrough()
        if spec.startswith(("http://", "https://")):
            return cls(mode=PLUGIN, plugin=HttpRedactor(spec))
        if spec.startswith("command:"):
            import shlex

            return cls(mode=PLUGIN, plugin=CommandRedactor(shlex.split(spec[len("command:"):])))
        raise ValueError(f"unknown redactor spec {spec!r}")


def _dimensions(png_bytes: bytes) -> tuple[int, int]:
    with Image.open(io.BytesIO(png_bytes)) as img:
        return img.size


def redact_page(page: RecordPage, policy: RedactionPolicy) -> RecordPage:
    """Apply the redaction policy to one page.

    Passthrough returns the identical payload with ``redacted=False``. A
    plugin must return an image of identical dimensions, otherwise
    :class:`RedactionError` is raised so the caller can quarantine the page.
    """
    if policy.mode == PASSTHROUGH:
        return replace(page, redacted=False)

    assert policy.plugin is not None
    original_size = _dimensions(page.image_bytes)
    redacted_bytes = policy.plugin.redact(page.image_bytes)
    try:
        redacted_size = _dimensions(redacted_bytes)
    except Exception as exc:
        raise RedactionError(f"redactor returned undecodable image: {exc}")
    if redacted_size != original_size:
        raise RedactionError(
            f"redactor changed dimensions {original_size} -> {redacted_size}"
        )
    return replace(page, image_bytes=redacted_bytes, redacted=True)
