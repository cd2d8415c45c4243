"""Identifier generation.

Entities get ULID-style identifiers: 26 Crockford base32 characters encoding
a 48-bit millisecond timestamp followed by 80 random bits, so ids sort by
creation time. Assessments instead get content-derived ids (see
:func:`content_id`) so that re-running a match over identical inputs produces
byte-identical output files.
"""

from __future__ import annotations

import hashlib
import os
import time

_CROCKFORD = "0123456789ABCDEFGHJKMNPQRSTVWXYZ"


def _encode_base32(value: int, length: int) -> str:
    chars = []
    for _ in range(length):
        chars.append(_CROCKFORD[value & 0x1F])
        value >>= 5
    return "".join(reversed(chars))


def new_id(prefix: str = "") -> str:
    """Return a sortable 26-char ULID-style id, optionally prefixed."""
    timestamp_ms = int(time.time() * 1000) & ((1 << 48) - 1)
    randomness = int.from_bytes(os.urandom(10), "big")
    body = _encode_base32(timestamp_ms, 10) + _encode_base32(randomness, 16)
    return f"{prefix}{body}" if prefix else body


def content_id(*parts: str, prefix: str = "") -> str:
    """Return a deterministic id derived from the given string parts.

    Identical parts always yield the identical id, which keeps re-runs of a
    deterministic pipeline reproducible at the byte level.
    """
    digest = hashlib.sha256("\x1f".join(parts).encode("utf-8")).digest()
    body = _encode_base32(int.from_bytes(digest[:16], "big"), 26)
    return f"{prefix}{body}" if prefix else body
