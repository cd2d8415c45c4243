"""Trial invariant checks. Violations are data, not faults."""

from __future__ import annotations

from .types import Trial

MAX_GUIDELINES = 4


def validate_trial(trial: Trial) -> list[str]:
    """Return a list of human-readable invariant violations (empty if clean)."""
    violations: list[str] = []
    if not trial.trial_id:
        violations.append("trial_id empty")
    if trial.prepped and not trial.criteria:
        violations.append("criteria empty after prep")

    seen_ids: set[str] = set()
    for criterion in trial.criteria:
        cid = criterion.criterion_id
        if cid in seen_ids:
            violations.append(f"duplicate criterion_id {cid!r}")
        seen_ids.add(cid)
        if not criterion.description.strip():
            violations.append(f"criterion {cid!r}: description empty")
        if len(criterion.guidelines) > MAX_GUIDELINES:
            violations.append(f"criterion {cid!r}: guidelines exceed {MAX_GUIDELINES}")
        if trial.prepped and len(criterion.guidelines) < 1:
            violations.append(f"criterion {cid!r}: guidelines empty after prep")
    return violations
