from .vector_store import (
    DimensionMismatch,
    StoreError,
    VectorStore,
    VersionMismatch,
    cosine_similarity,
)

__all__ = [
    "DimensionMismatch",
    "StoreError",
    "VectorStore",
    "VersionMismatch",
    "cosine_similarity",
]
