from .engine import (
    DEFAULT_STRATEGY,
    MatchingError,
    MatchRunResult,
    assess_criterion,
    assess_patient_trial,
    document_order,
    relevance_check,
    select_pages,
)

__all__ = [
    "DEFAULT_STRATEGY",
    "MatchRunResult",
    "MatchingError",
    "assess_criterion",
    "assess_patient_trial",
    "document_order",
    "relevance_check",
    "select_pages",
]
