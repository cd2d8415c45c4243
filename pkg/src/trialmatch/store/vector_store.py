"""Persistent per-page embedding store with exact cosine top-k search.

Records average a few dozen pages, so search is exhaustive and exact: no
approximate index, which keeps oracle testing trivial. Vectors are stored
unnormalized as little-endian float32 rows; similarity is computed in
float64 with exact (fsum) accumulation at query time.

Concurrency: many concurrent readers or one writer; mutations take the
writer lock, searches work on an immutable snapshot.
"""

from __future__ import annotations

import json
import logging
import math
import os
import struct
import threading
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np

from ..core import EmbeddingVector, SearchHit, StoredVector

logger = logging.getLogger(__name__)

MAGIC = b"TMVS"
FORMAT_VERSION = 1


class StoreError(Exception):
    pass


class DimensionMismatch(StoreError):
    pass


class VersionMismatch(StoreError):
    """On-disk format version differs; an explicit migration is required."""


def cosine_similarity(a: Sequence[float], b: Sequence[float]) -> float:
    """Exact-accumulation cosine similarity; zero-norm inputs score 0.0."""
    dot = math.fsum(x * y for x, y in zip(a, b))
    norm_a = math.sqrt(math.fsum(x * x for x in a))
    norm_b = math.sqrt(math.fsum(y * y for y in b))
    if norm_a == 0.0 or norm_b == 0.0:
        return 0.0
    return dot / (norm_a * norm_b)


@dataclass(frozen=True)
class _Row:
    page_id: str
    patient_id: str
    content_hash: str
    values: tuple[float, ...]  # float32-quantized at upsert


class VectorStore:
    def __init__(self, dimension: Optional[int] = None):
        self._dimension = dimension
        self._rows: dict[tuple[str, str], _Row] = {}
        self._order: list[tuple[str, str]] = []
        self._write_lock = threading.RLock()

    @property
    def dimension(self) -> Optional[int]:
        return self._dimension

    def __len__(self) -> int:
        return len(self._rows)

    # -- writes --------------------------------------------------------------

    def upsert(self, vectors: Iterable[StoredVector]) -> int:
        """Insert or replace vectors; duplicate (patient_id, page_id) replaces.

        A batch with inconsistent dimensions is rejected before any write.
        """
        batch = list(vectors)
        if not batch:
            return 0
        dims = {v.vector.dimension for v in batch}
        if len(dims) > 1:
            raise DimensionMismatch(f"mixed dimensions in batch: {sorted(dims)}")
        (dim,) = dims
        with self._write_lock:
            if self._dimension is None:
                self._dimension = dim
            elif dim != self._dimension:
                raise DimensionMismatch(
                    f"batch dimension {dim} != store dimension {self._dimension}"
                )
            for item in batch:
                key = (item.patient_id, item.page_id)
                quantized = tuple(
                    float(x) for x in np.asarray(item.vector.values, dtype=np.float32)
                )
                row = _Row(
                    page_id=item.page_id,
                    patient_id=item.patient_id,
                    content_hash=item.content_hash,
                    values=quantized,
                )
                if key not in self._rows:
                    self._order.append(key)
                self._rows[key] = row
        return len(batch)

    def get(self, patient_id: str, page_id: str) -> Optional[StoredVector]:
        row = self._rows.get((patient_id, page_id))
        if row is None:
            return None
        return StoredVector(
            page_id=row.page_id,
            patient_id=row.patient_id,
            vector=EmbeddingVector.of(row.values),
            content_hash=row.content_hash,
        )

    # -- search ---------------------------------------------------------------

    def search_top_k(
        self, patient_id: str, query_vector: EmbeddingVector, k: int
    ) -> list[SearchHit]:
        """Exact cosine top-k over one patient's pages.

        Hits are sorted by descending score, ties broken by ascending
        page_id. An unknown patient yields an empty result (with a warning).
        """
        if k < 1:
            raise ValueError("k must be >= 1")
        if self._dimension is not None and query_vector.dimension != self._dimension:
            raise DimensionMismatch(
                f"query dimension {query_vector.dimension} != store dimension {self._dimension}"
            )
        snapshot = [row for row in self._rows.values() if row.patient_id == patient_id]
        if not snapshot:
            logger.warning("search over unknown or empty patient %r", patient_id)
            return []
        scored = [
            SearchHit(page_id=row.page_id, score=cosine_similarity(query_vector.values, row.values))
            for row in snapshot
        ]
        scored.sort(key=lambda hit: (-hit.score, hit.page_id))
        return scored[:k]

    def patient_page_ids(self, patient_id: str) -> list[str]:
        return [row.page_id for row in self._rows.values() if row.patient_id == patient_id]

    def stats(self) -> dict:
        per_patient: dict[str, int] = {}
        for row in self._rows.values():
            per_patient[row.patient_id] = per_patient.get(row.patient_id, 0) + 1
        return {
            "count": len(self._rows),
            "dimension": self._dimension,
            "patients": per_patient,
        }

    # -- persistence -----------------------------------------------------------

    def persist(self, path) -> None:
        """Write the store to ``path`` (vectors) and ``path + '.meta.jsonl'``."""
        path = Path(path)
        with self._write_lock:
            dim = self._dimension or 0
            rows = [self._rows[key] for key in self._order]
            header = MAGIC + struct.pack("<HIQ", FORMAT_VERSION, dim, len(rows))
            tmp_vec = path.with_suffix(path.suffix + ".tmp")
            with open(tmp_vec, "wb") as fh:
                fh.write(header)
                for row in rows:
                    fh.write(np.asarray(row.values, dtype="<f4").tobytes())
            tmp_meta = Path(str(path) + ".meta.jsonl.tmp")
            with open(tmp_meta, "w", encoding="utf-8") as fh:
                for row in rows:
                    fh.write(
                        json.dumps(
                            {
                                "page_id": row.page_id,
                                "patient_id": row.patient_id,
                                "content_hash": row.content_hash,
                            },
                            sort_keys=True,
                        )
                        + "\n"
                    )
            os.replace(tmp_vec, path)
            os.replace(tmp_meta, str(path) + ".meta.jsonl")

    @classmethod
    def load(cls, path) -> "VectorStore":
        """Load a persisted store; the in-memory store is untouched on failure."""
        path = Path(path)
        try:
            blob = path.read_bytes()
        except OSError as exc:
            raise StoreError(f"cannot read vector file: {exc}")
        if len(blob) < len(MAGIC) + struct.calcsize("<HIQ") or blob[:4] != MAGIC:
            raise StoreError(f"{path} is not a vector store file")
        version, dim, count = struct.unpack_from("<HIQ", blob, 4)
        if version != FORMAT_VERSION:
            raise VersionMismatch(
                f"store format version {version} != supported {FORMAT_VERSION}; migrate first"
            )
        offset = 4 + struct.calcsize("<HIQ")
        expected = offset + count * dim * 4
        if len(blob) != expected:
            raise StoreError(
                f"corrupted vector file: expected {expected} bytes, found {len(blob)}"
            )
        meta_path = Path(str(path) + ".meta.jsonl")
        try:
            meta_lines = [
                json.loads(line)
                for line in meta_path.read_text("utf-8").splitlines()
                if line.strip()
            ]
        except (OSError, json.JSONDecodeError) as exc:
            raise StoreError(f"corrupted metadata sidecar: {exc}")
        if len(meta_lines) != count:
            raise StoreError(
                f"metadata rows {len(meta_lines)} != vector rows {count}"
            )
        store = cls(dimension=dim if count else None)
        matrix = np.frombuffer(blob, dtype="<f4", offset=offset).reshape(count, dim) if count else []
        batch = []
        for meta, row in zip(meta_lines, matrix):
            batch.append(
                StoredVector(
                    page_id=meta["page_id"],
                    patient_id=meta["patient_id"],
                    vector=EmbeddingVector.of(row),
                    content_hash=meta.get("content_hash", ""),
                )
            )
        if batch:
            store.upsert(batch)
        if count:
            store._dimension = dim
        return store

    def state(self) -> list[StoredVector]:
        """Stable snapshot of all rows (insertion order), for equality checks."""
        return [
            StoredVector(
                page_id=self._rows[key].page_id,
                patient_id=self._rows[key].patient_id,
                vector=EmbeddingVector.of(self._rows[key].values),
                content_hash=self._rows[key].content_hash,
            )
            for key in self._order
        ]
