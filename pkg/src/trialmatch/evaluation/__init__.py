from .ablation import AblationRow, render_ablation, strategy_ablation
from .corpus import CorpusProfile, profile_corpus
from .ground_truth import infer_ground_truth
from .reports import (
    ClassificationReport,
    ClassMetrics,
    accuracy_by_group,
    classification_report,
    render_report,
    report_from_confusion,
    subset_report,
)
from .review_time import (
    PairReviewDuration,
    ReviewTimeStats,
    pair_durations,
    review_time_stats,
)

__all__ = [
    "AblationRow",
    "ClassMetrics",
    "ClassificationReport",
    "CorpusProfile",
    "PairReviewDuration",
    "ReviewTimeStats",
    "accuracy_by_group",
    "classification_report",
    "infer_ground_truth",
    "pair_durations",
    "profile_corpus",
    "render_ablation",
    "render_report",
    "report_from_confusion",
    "review_time_stats",
    "strategy_ablation",
    "subset_report",
]
