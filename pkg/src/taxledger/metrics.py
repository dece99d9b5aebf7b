"""Binary-classification metrics: confusion counts, P/R/F1, ROC and AUC.

Degenerate 0/0 ratios map to 0 by convention so that empty-prediction
models still produce a report instead of crashing an ablation run.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence


class DegenerateLabels(ValueError):
    def __init__(self) -> None:
        super().__init__("ROC needs at least one positive and one negative label")


@dataclass
class EvalReport:
    tp: int
    fp: int
    tn: int
    fn: int
    precision: float
    recall: float
    f1: float
    roc_points: list[tuple[float, float]] = field(default_factory=list)
    auc: float = 0.0
    threshold: float = 0.5

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn

    def to_dict(self) -> dict:
        return {
            "counts": {"tp": self.tp, "fp": self.fp, "tn": self.tn, "fn": self.fn},
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
            "auc": self.auc,
            "threshold": self.threshold,
            "roc_points": [[fpr, tpr] for fpr, tpr in self.roc_points],
        }


def confusion(
    scores: Sequence[tuple[float, int]], threshold: float
) -> tuple[int, int, int, int]:
    """(tp, fp, tn, fn) with the flag = score >= threshold convention."""
    if not scores:
        raise ValueError("confusion of an empty score list")
    tp = fp = tn = fn = 0
    for score, truth in scores:
        flagged = score >= threshold
        if flagged and truth:
            tp += 1
        elif flagged and not truth:
            fp += 1
        elif not flagged and truth:
            fn += 1
        else:
            tn += 1
    return tp, fp, tn, fn


def prf1(counts: tuple[int, int, int, int]) -> tuple[float, float, float]:
    """(precision, recall, f1); any 0/0 is 0 by convention."""
    tp, fp, _tn, fn = counts
    precision = tp / (tp + fp) if (tp + fp) > 0 else 0.0
    recall = tp / (tp + fn) if (tp + fn) > 0 else 0.0
    f1 = 2 * precision * recall / (precision + recall) if (precision + recall) > 0 else 0.0
    return precision, recall, f1


def roc_auc(
    scores: Sequence[tuple[float, int]]
) -> tuple[list[tuple[float, float]], float]:
    """ROC points swept over distinct scores (plus +/-inf) and trapezoid AUC.

    Equal scores are grouped at one threshold, which makes the trapezoid
    area equal to the Mann-Whitney statistic P(s+ > s-) + 0.5 P(tie).
    Also returns matching sweep thresholds via :func:`roc_thresholds`.
    """
    n_pos = sum(1 for _s, t in scores if t)
    n_neg = len(scores) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise DegenerateLabels()

    points: list[tuple[float, float]] = [(0.0, 0.0)]
    tp = fp = 0
    for score, group in _grouped_desc(scores):
        tp += sum(1 for t in group if t)
        fp += sum(1 for t in group if not t)
        points.append((fp / n_neg, tp / n_pos))
    points.append((1.0, 1.0))  # -inf endpoint; flags everything

    auc = 0.0
    for (x0, y0), (x1, y1) in zip(points, points[1:]):
        auc += (x1 - x0) * (y0 + y1) / 2.0
    return points, auc


def roc_thresholds(scores: Sequence[tuple[float, int]]) -> list[float]:
    """Thresholds aligned with roc_auc's point list: +inf, scores desc, -inf."""
    distinct = sorted({s for s, _t in scores}, reverse=True)
    return [float("inf"), *distinct, float("-inf")]


def _grouped_desc(scores: Iterable[tuple[float, int]]):
    ordered = sorted(scores, key=lambda st: -st[0])
    i = 0
    while i < len(ordered):
        j = i
        while j < len(ordered) and ordered[j][0] == ordered[i][0]:
            j += 1
        yield ordered[i][0], [t for _s, t in ordered[i:j]]
        i = j


def evaluate_scores(scores: Sequence[tuple[float, int]], threshold: float = 0.5) -> EvalReport:
    """Full report for one model's scored test set."""
    counts = confusion(scores, threshold)
    precision, recall, f1 = prf1(counts)
    points, auc = roc_auc(scores)
    tp, fp, tn, fn = counts
    return EvalReport(
        tp=tp, fp=fp, tn=tn, fn=fn,
        precision=precision, recall=recall, f1=f1,
        roc_points=points, auc=auc, threshold=threshold,
    )


def roc_csv(scores: Sequence[tuple[float, int]]) -> str:
    """CSV text "threshold,fpr,tpr" for external plotting."""
    points, _auc = roc_auc(scores)
    thresholds = roc_thresholds(scores)
    lines = ["threshold,fpr,tpr"]
    for thr, (fpr, tpr) in zip(thresholds, points):
        lines.append(f"{thr},{fpr},{tpr}")
    return "\n".join(lines) + "\n"
