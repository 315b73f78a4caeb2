"""
Pose and plane-matching metrics.

Pose: per-query rotation/translation errors, mean/median, recall at threshold pairs
(inclusive on both errors). Matching: precision/recall/F1 and step-wise AP, where a
prediction is a true positive when it pairs the query with its labelled map
primitive and the projected-mask IoU reaches `iou_min`.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Iterable, Sequence

import numpy as np
import structlog

from config.experiment import DEFAULT_RECALL_THRESHOLDS, RecallThreshold
from services.errors import LengthMismatch
from services.geometry import Pose, rotation_angle, translation_distance

if TYPE_CHECKING:
    from rooms.matching.tools.labels import MatchLabels

logger = structlog.get_logger()

DEFAULT_IOU_MIN = 0.3


# =============================================================================
# Pose metrics
# =============================================================================

@dataclass
class PoseMetrics:
    """Per-query pose errors with aggregates and recall per threshold pair."""
    rotation_errors: list[float]
    translation_errors: list[float]
    thresholds: list[RecallThreshold]
    recalls: list[float]

    @property
    def count(self) -> int:
        return len(self.rotation_errors)

    @property
    def mean_rotation(self) -> float:
        return float(np.mean(self.rotation_errors)) if self.count else 0.0

    @property
    def median_rotation(self) -> float:
        return float(np.median(self.rotation_errors)) if self.count else 0.0

    @property
    def mean_translation(self) -> float:
        return float(np.mean(self.translation_errors)) if self.count else 0.0

    @property
    def median_translation(self) -> float:
        return float(np.median(self.translation_errors)) if self.count else 0.0

    def to_dict(self) -> dict:
        return {
            "count": self.count,
            "rotation_deg": {"mean": self.mean_rotation, "median": self.median_rotation},
            "translation_m": {"mean": self.mean_translation, "median": self.median_translation},
            "recall": [
                {"meters": t.meters, "degrees": t.degrees, "recall": r}
                for t, r in zip(self.thresholds, self.recalls)
            ],
        }


def pose_metrics(
    estimates: Sequence[Pose],
    ground_truths: Sequence[Pose],
    thresholds: Sequence[RecallThreshold] = DEFAULT_RECALL_THRESHOLDS,
) -> PoseMetrics:
    """
    Compare estimated against ground-truth poses.

    Raises:
        LengthMismatch: lists of different length
    """
    if len(estimates) != len(ground_truths):
        raise LengthMismatch(
            "Estimate and ground-truth lists differ in length",
            estimates=len(estimates),
            ground_truths=len(ground_truths),
        )
    rotation_errors = [
        rotation_angle(est.rotation, gt.rotation) for est, gt in zip(estimates, ground_truths)
    ]
    translation_errors = [
        translation_distance(est.translation, gt.translation)
        for est, gt in zip(estimates, ground_truths)
    ]
    recalls = []
    for threshold in thresholds:
        hits = sum(
            1
            for dr, dt in zip(rotation_errors, translation_errors)
            if dt <= threshold.meters and dr <= threshold.degrees
        )
        recalls.append(hits / len(estimates) if estimates else 0.0)

    return PoseMetrics(
        rotation_errors=rotation_errors,
        translation_errors=translation_errors,
        thresholds=list(thresholds),
        recalls=recalls,
    )


# =============================================================================
# Matching metrics
# =============================================================================

@dataclass
class MatchOutcome:
    """One scored prediction and whether it counts as a true positive."""
    score: float
    true_positive: bool


@dataclass
class MatchMetrics:
    precision: float
    recall: float
    f1: float
    average_precision: float
    true_positives: int
    ground_truth_count: int
    prediction_count: int
    pr_curve: list[tuple[float, float, float]] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
            "ap": self.average_precision,
            "tp": self.true_positives,
            "gt": self.ground_truth_count,
            "pred": self.prediction_count,
        }


def match_outcomes(
    predictions: Iterable[tuple[int, int, float]],
    labels: "MatchLabels",
    ious: np.ndarray,
    iou_min: float = DEFAULT_IOU_MIN,
) -> list[MatchOutcome]:
    """Classify (query index, map index, score) predictions against the labels."""
    expected = dict(labels.matches)
    outcomes = []
    for query_index, map_index, score in predictions:
        hit = (
            expected.get(query_index) == map_index
            and float(ious[query_index, map_index]) >= iou_min
        )
        outcomes.append(MatchOutcome(score=float(score), true_positive=bool(hit)))
    return outcomes


def precision_recall_curve(
    outcomes: Sequence[MatchOutcome],
    ground_truth_count: int,
) -> list[tuple[float, float, float]]:
    """
    (score threshold, precision, recall) points sweeping the threshold downwards.

    Predictions with equal scores enter together, so the curve does not depend on
    the order of tied predictions.
    """
    ordered = sorted(outcomes, key=lambda o: -o.score)
    points = []
    tp = 0
    k = 0
    while k < len(ordered):
        score = ordered[k].score
        while k < len(ordered) and ordered[k].score == score:
            tp += ordered[k].true_positive
            k += 1
        precision = tp / k
        recall = tp / ground_truth_count if ground_truth_count else 0.0
        points.append((score, precision, recall))
    return points


def summarize_matches(outcomes: Sequence[MatchOutcome], ground_truth_count: int) -> MatchMetrics:
    """Precision/recall/F1/AP from classified predictions (possibly pooled over queries)."""
    tp = sum(o.true_positive for o in outcomes)
    precision = tp / len(outcomes) if outcomes else 0.0
    recall = tp / ground_truth_count if ground_truth_count else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall > 0 else 0.0

    curve = precision_recall_curve(outcomes, ground_truth_count)
    average_precision = 0.0
    previous_recall = 0.0
    for _, p, r in curve:
        average_precision += (r - previous_recall) * p
        previous_recall = r

    return MatchMetrics(
        precision=precision,
        recall=recall,
        f1=f1,
        average_precision=average_precision,
        true_positives=tp,
        ground_truth_count=ground_truth_count,
        prediction_count=len(outcomes),
        pr_curve=curve,
    )


def match_metrics(
    predictions: Iterable[tuple[int, int, float]],
    labels: "MatchLabels",
    ious: np.ndarray,
    iou_min: float = DEFAULT_IOU_MIN,
) -> MatchMetrics:
    """Plane-matching metrics for one query."""
    outcomes = match_outcomes(predictions, labels, ious, iou_min)
    return summarize_matches(outcomes, len(labels.matches))
