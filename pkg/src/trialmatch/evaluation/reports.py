"""Classification reports with exact per-class metrics.

Metrics are computed at full precision from integer confusion counts; the
0/0 convention is 0. Rendering rounds to 2 decimals, underlying values stay
exact. Predictions outside the class set (e.g. a third verdict against a
binary label space) count against recall and accuracy but get no row of
their own.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Callable, Hashable, Mapping, Optional, Sequence


@dataclass(frozen=True)
class ClassMetrics:
    precision: float
    recall: float
    f1: float
    support: int


@dataclass(frozen=True)
class ClassificationReport:
    classes: tuple[str, ...]
    per_class: Mapping[str, ClassMetrics]
    accuracy: float
    total: int
    macro: ClassMetrics
    weighted: ClassMetrics

    def to_dict(self) -> dict:
        return {
            "classes": {
                name: {
                    "precision": m.precision,
                    "recall": m.recall,
                    "f1": m.f1,
                    "support": m.support,
                }
                for name, m in self.per_class.items()
            },
            "accuracy": self.accuracy,
            "total": self.total,
            "macro_avg": {
                "precision": self.macro.precision,
                "recall": self.macro.recall,
                "f1": self.macro.f1,
                "support": self.macro.support,
            },
            "weighted_avg": {
                "precision": self.weighted.precision,
                "recall": self.weighted.recall,
                "f1": self.weighted.f1,
                "support": self.weighted.support,
            },
        }


def _safe_div(numerator: float, denominator: float) -> float:
    return numerator / denominator if denominator else 0.0


def classification_report(
    labels: Mapping[Hashable, str],
    predictions: Mapping[Hashable, str],
    class_set: Sequence[str],
) -> ClassificationReport:
    """Exact precision/recall/F1 per class plus accuracy and averages.

    ``labels`` keys must be a subset of ``predictions`` keys; samples are the
    label keys. An empty label set yields the defined empty report.
    """
    missing = [k for k in labels if k not in predictions]
    if missing:
        raise ValueError(f"{len(missing)} labeled keys lack predictions (e.g. {missing[0]!r})")

    classes = tuple(class_set)
    true_positive = {c: 0 for c in classes}
    predicted = {c: 0 for c in classes}
    actual = {c: 0 for c in classes}
    correct = 0
    total = 0
    for key, truth in labels.items():
        pred = predictions[key]
        total += 1
        if truth == pred:
            correct += 1
        if truth in actual:
            actual[truth] += 1
        if pred in predicted:
            predicted[pred] += 1
        if truth == pred and truth in true_positive:
            true_positive[truth] += 1

    per_class = {}
    for c in classes:
        precision = _safe_div(true_positive[c], predicted[c])
        recall = _safe_div(true_positive[c], actual[c])
        f1 = _safe_div(2 * precision * recall, precision + recall)
        per_class[c] = ClassMetrics(
            precision=precision, recall=recall, f1=f1, support=actual[c]
        )

    n_classes = len(classes)
    macro = ClassMetrics(
        precision=_safe_div(sum(m.precision for m in per_class.values()), n_classes),
        recall=_safe_div(sum(m.recall for m in per_class.values()), n_classes),
        f1=_safe_div(sum(m.f1 for m in per_class.values()), n_classes),
        support=total,
    )
    support_sum = sum(m.support for m in per_class.values())
    weighted = ClassMetrics(
        precision=_safe_div(
            sum(m.precision * m.support for m in per_class.values()), support_sum
        ),
        recall=_safe_div(sum(m.recall * m.support for m in per_class.values()), support_sum),
        f1=_safe_div(sum(m.f1 * m.support for m in per_class.values()), support_sum),
        support=total,
    )
    return ClassificationReport(
        classes=classes,
        per_class=per_class,
        accuracy=_safe_div(correct, total),
        total=total,
        macro=macro,
        weighted=weighted,
    )


def report_from_confusion(
    counts: Mapping[tuple[str, str], int], class_set: Sequence[str]
) -> ClassificationReport:
    """Build a report from (true class, predicted class) -> count pairs."""
    labels: dict[int, str] = {}
    predictions: dict[int, str] = {}
    key = 0
    for (truth, pred), count in counts.items():
        for _ in range(count):
            labels[key] = truth
            predictions[key] = pred
            key += 1
    return classification_report(labels, predictions, class_set)


def subset_report(
    labels: Mapping[Hashable, str],
    predictions: Mapping[Hashable, str],
    class_set: Sequence[str],
    selector: Callable[[Hashable], bool],
) -> ClassificationReport:
    """Classification report restricted to keys accepted by ``selector``."""
    kept = {k: v for k, v in labels.items() if selector(k)}
    return classification_report(kept, predictions, class_set)


def accuracy_by_group(
    labels: Mapping[Hashable, str],
    predictions: Mapping[Hashable, str],
    group_of: Callable[[Hashable], Optional[Any]],
) -> dict[Any, tuple[float, int]]:
    """Accuracy and sample count per group; empty groups are simply absent."""
    correct: dict[Any, int] = {}
    totals: dict[Any, int] = {}
    for key, truth in labels.items():
        group = group_of(key)
        if group is None:
            continue
        totals[group] = totals.get(group, 0) + 1
        if predictions[key] == truth:
            correct[group] = correct.get(group, 0) + 1
    return {
        group: (_safe_div(correct.get(group, 0), totals[group]), totals[group])
        for group in sorted(totals, key=str)
    }


def render_report(report: ClassificationReport, title: str = "") -> str:
    """Aligned text rendering, 2-decimal rounding like the printed tables."""
    header = f"{'Class':<16}{'Precision':>10}{'Recall':>10}{'F1-score':>10}{'Support':>10}"
    lines = []
    if title:
        lines.append(title)
    lines.append(header)
    lines.append("-" * len(header))
    for name in report.classes:
        m = report.per_class[name]
        lines.append(
            f"{name:<16}{m.precision:>10.2f}{m.recall:>10.2f}{m.f1:>10.2f}{m.support:>10d}"
        )
    lines.append("-" * len(header))
    lines.append(f"{'Accuracy':<16}{'':>10}{'':>10}{report.accuracy:>10.2f}{report.total:>10d}")
    for label, m in (("Macro avg", report.macro), ("Weighted avg", report.weighted)):
        lines.append(
            f"{label:<16}{m.precision:>10.2f}{m.recall:>10.2f}{m.f1:>10.2f}{m.support:>10d}"
        )
    return "\n".join(lines)
