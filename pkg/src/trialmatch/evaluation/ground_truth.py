"""Ground-truth inference from human feedback.

Criterion-level reviews are ground truth whenever available. When only a
patient-level classification exists, two conservative rules confirm AI
verdicts (never contradict them):

  1. direct criterion review        -> label = human verdict
  2. patient NotEligible and the AI flagged exactly one disqualifying
     criterion (unmet inclusion or met exclusion)
                                     -> that criterion's AI verdict confirmed
  3. patient ToScreen               -> every met-inclusion and
                                       unmet-exclusion AI verdict confirmed
  4. otherwise                      -> no label
"""

from __future__ import annotations

import logging
from typing import Iterable, Mapping, Sequence

from ..core import (
    CriterionAssessment,
    CriterionKind,
    CriterionReview,
    FeedbackEvent,
    GroundTruthLabel,
    LabelProvenance,
    PatientClassification,
    PatientLabel,
    Verdict,
)

logger = logging.getLogger(__name__)

Key = tuple[str, str, str]  # (patient_id, trial_id, criterion_id)


def _is_disqualifying(kind: CriterionKind, verdict: Verdict) -> bool:
    return (kind is CriterionKind.INCLUSION and verdict is Verdict.UNMET) or (
        kind is CriterionKind.EXCLUSION and verdict is Verdict.MET
    )


def _is_confirmable_under_to_screen(kind: CriterionKind, verdict: Verdict) -> bool:
    return (kind is CriterionKind.INCLUSION and verdict is Verdict.MET) or (
        kind is CriterionKind.EXCLUSION and verdict is Verdict.UNMET
    )


def infer_ground_truth(
    assessments: Iterable[CriterionAssessment],
    feedback_events: Sequence[FeedbackEvent],
    criterion_kinds: Mapping[str, CriterionKind],
) -> list[GroundTruthLabel]:
    """Apply the labeling rules over assessments and the feedback log.

    Direct reviews always override inferred labels for the same key; for
    conflicting direct reviews the latest timestamp wins (conflict logged).
    Failed assessments never contribute AI verdicts.
    """
    events = sorted(feedback_events, key=lambda e: e.timestamp)

    ai_verdicts: dict[tuple[str, str], dict[str, Verdict]] = {}
    for assessment in assessments:
        if assessment.failed:
            continue
        pair = (assessment.patient_id, assessment.trial_id)
        ai_verdicts.setdefault(pair, {})[assessment.criterion_id] = assessment.verdict

    direct: dict[Key, Verdict] = {}
    classifications: dict[tuple[str, str], PatientLabel] = {}
    for event in events:
        pair = (event.patient_id, event.trial_id)
        if isinstance(event.payload, CriterionReview):
            key = (event.patient_id, event.trial_id, event.payload.criterion_id)
            if key in direct and direct[key] is not event.payload.human_verdict:
                logger.warning(
                    "conflicting direct reviews for %s: %s overridden by %s (latest wins)",
                    key,
                    direct[key].value,
                    event.payload.human_verdict.value,
                )
            direct[key] = event.payload.human_verdict
        elif isinstance(event.payload, PatientClassification):
            classifications[pair] = event.payload.label

    inferred: dict[Key, Verdict] = {}
    for pair, label in classifications.items():
        verdicts = ai_verdicts.get(pair, {})
        if label is PatientLabel.NOT_ELIGIBLE:
            disqualifiers = [
                cid
                for cid, verdict in verdicts.items()
                if cid in criterion_kinds
                and _is_disqualifying(criterion_kinds[cid], verdict)
            ]
            if len(disqualifiers) == 1:
                cid = disqualifiers[0]
                inferred[(pair[0], pair[1], cid)] = verdicts[cid]
        elif label is PatientLabel.TO_SCREEN:
            for cid, verdict in verdicts.items():
                if cid in criterion_kinds and _is_confirmable_under_to_screen(
                    criterion_kinds[cid], verdict
                ):
                    inferred[(pair[0], pair[1], cid)] = verdict

    labels: dict[Key, GroundTruthLabel] = {}
    for key, verdict in inferred.items():
        labels[key] = GroundTruthLabel(
            patient_id=key[0],
            trial_id=key[1],
            criterion_id=key[2],
            label=verdict,
            provenance=LabelProvenance.INFERRED_FROM_PATIENT_LABEL,
        )
    for key, verdict in direct.items():
        labels[key] = GroundTruthLabel(
            patient_id=key[0],
            trial_id=key[1],
            criterion_id=key[2],
            label=verdict,
            provenance=LabelProvenance.DIRECT_CRITERION_REVIEW,
        )
    return [labels[key] for key in sorted(labels)]
