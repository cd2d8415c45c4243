"""Review-time statistics from the feedback event stream.

A patient-trial pair qualifies when at least two distinct criteria were
reviewed before the patient classification. The measured span (first
criterion review to classification) is adjusted by N/(N-1) to account for
the unmeasured first review; raw spans under one minute or over one hour
are excluded as artifacts.
"""

from __future__ import annotations

import statistics
from dataclasses import dataclass
from typing import Optional, Sequence

from ..core import CriterionReview, FeedbackEvent, PatientClassification

MIN_RAW_SECONDS = 60.0
MAX_RAW_SECONDS = 3600.0


@dataclass(frozen=True)
class PairReviewDuration:
    patient_id: str
    trial_id: str
    criteria_reviewed: int
    raw_seconds: float
    adjusted_seconds: float


@dataclass(frozen=True)
class ReviewTimeStats:
    count: int
    mean_seconds: Optional[float] = None
    median_seconds: Optional[float] = None
    q1_seconds: Optional[float] = None
    q3_seconds: Optional[float] = None
    durations: tuple[PairReviewDuration, ...] = ()


def pair_durations(feedback_events: Sequence[FeedbackEvent]) -> list[PairReviewDuration]:
    """Adjusted review durations for every qualifying patient-trial pair."""
    by_pair: dict[tuple[str, str], list[FeedbackEvent]] = {}
    for event in sorted(feedback_events, key=lambda e: e.timestamp):
        by_pair.setdefault((event.patient_id, event.trial_id), []).append(event)

    durations: list[PairReviewDuration] = []
    for (patient_id, trial_id), events in sorted(by_pair.items()):
        classification_ts = None
        for event in events:
            if isinstance(event.payload, PatientClassification):
                classification_ts = event.timestamp
                break
        if classification_ts is None:
            continue
        review_times = [
            e.timestamp
            for e in events
            if isinstance(e.payload, CriterionReview) and e.timestamp <= classification_ts
        ]
        reviewed_criteria = {
            e.payload.criterion_id
            for e in events
            if isinstance(e.payload, CriterionReview) and e.timestamp <= classification_ts
        }
        n = len(reviewed_criteria)
        if n < 2:
            continue
        raw = (classification_ts - min(review_times)).total_seconds()
        if raw < MIN_RAW_SECONDS or raw > MAX_RAW_SECONDS:
            continue
        durations.append(
            PairReviewDuration(
                patient_id=patient_id,
                trial_id=trial_id,
                criteria_reviewed=n,
                raw_seconds=raw,
                adjusted_seconds=raw * n / (n - 1),
            )
        )
    return durations


def review_time_stats(feedback_events: Sequence[FeedbackEvent]) -> ReviewTimeStats:
    """Median/mean/IQR of adjusted pair review durations."""
    durations = pair_durations(feedback_events)
    if not durations:
        return ReviewTimeStats(count=0)
    values = [d.adjusted_seconds for d in durations]
    if len(values) == 1:
        q1 = median = q3 = values[0]
    else:
        q1, median, q3 = statistics.quantiles(values, n=4, method="inclusive")
    return ReviewTimeStats(
        count=len(values),
        mean_seconds=statistics.fmean(values),
        median_seconds=median,
        q1_seconds=q1,
        q3_seconds=q3,
        durations=tuple(durations),
    )
