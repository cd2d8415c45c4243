"""Retrieval-strategy ablation: positive-class metrics vs images used."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping

from ..core import CriterionAssessment, Verdict

Key = tuple[str, str, str]  # (patient_id, trial_id, criterion_id)


@dataclass(frozen=True)
class AblationRow:
    strategy: str
    positive_precision: float
    positive_recall: float
    avg_images_used: float
    assessments: int
    labeled: int

    def to_dict(self) -> dict:
        return {
            "strategy": self.strategy,
            "positive_precision": self.positive_precision,
            "positive_recall": self.positive_recall,
            "avg_images_used": self.avg_images_used,
            "assessments": self.assessments,
            "labeled": self.labeled,
        }


def strategy_ablation(
    assessments: Iterable[CriterionAssessment],
    labels: Mapping[Key, Verdict],
    positive: Verdict = Verdict.MET,
) -> list[AblationRow]:
    """One row per retrieval strategy, plot-ready.

    Positive precision/recall are computed against the provided labels for
    the positive class (met); the image count averages over every completed
    assessment in the strategy group, labeled or not.
    """
    groups: dict[str, list[CriterionAssessment]] = {}
    for assessment in assessments:
        if assessment.failed:
            continue
        groups.setdefault(assessment.strategy.spec(), []).append(assessment)

    rows = []
    for strategy_spec in sorted(groups):
        group = groups[strategy_spec]
        true_positive = predicted_positive = actual_positive = labeled = 0
        for assessment in group:
            key = (assessment.patient_id, assessment.trial_id, assessment.criterion_id)
            label = labels.get(key)
            if label is None:
                continue
            labeled += 1
            if assessment.verdict is positive:
                predicted_positive += 1
            if label is positive:
                actual_positive += 1
            if label is positive and assessment.verdict is positive:
                true_positive += 1
        precision = true_positive / predicted_positive if predicted_positive else 0.0
        recall = true_positive / actual_positive if actual_positive else 0.0
        avg_images = sum(len(a.source_page_ids) for a in group) / len(group)
        rows.append(
            AblationRow(
                strategy=strategy_spec,
                positive_precision=precision,
                positive_recall=recall,
                avg_images_used=avg_images,
                assessments=len(group),
                labeled=labeled,
            )
        )
    return rows


def render_ablation(rows: list[AblationRow]) -> str:
    header = (
        f"{'Strategy':<20}{'Precision':>10}{'Recall':>10}{'AvgImages':>11}{'N':>7}{'Labeled':>9}"
    )
    lines = [header, "-" * len(header)]
    for row in rows:
        lines.append(
            f"{row.strategy:<20}{row.positive_precision:>10.2f}{row.positive_recall:>10.2f}"
            f"{row.avg_images_used:>11.2f}{row.assessments:>7d}{row.labeled:>9d}"
        )
    return "\n".join(lines)
