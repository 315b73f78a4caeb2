"""
Evaluate Task Processor

Scores pose estimates against ground truth and, when a matches file is given,
plane predictions against their labels. Also provides the report writers used
at the end of `planeloc relocalize`.

Reports written to the output directory:
    metrics.json     pose aggregates + recalls, pooled matching metrics
    metrics.csv      the same numbers as metric,value rows
    pose_errors.csv  query_index,rotation_deg,translation_m
    pr_curve.csv     score,precision,recall (pooled over queries)
"""
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
import structlog

from config.experiment import EvaluationConfig
from rooms.matching.tools.labels import MatchLabels
from schemas.results import (
    EstimateRecord,
    EstimatesFile,
    GroundTruthEntry,
    GroundTruthFile,
    MatchesFile,
    MetricsFile,
    QueryMatches,
)
from services.errors import LengthMismatch, ShapeMismatch
from services.geometry import Pose
from services.metrics import MatchMetrics, PoseMetrics, match_outcomes, pose_metrics, summarize_matches
from services.storage import read_json, write_csv, write_json

logger = structlog.get_logger()


@dataclass
class EvaluationReport:
    query_indices: list[int]
    pose: PoseMetrics
    matching: Optional[MatchMetrics] = None
    failed_queries: list[int] = field(default_factory=list)


def _paired(
    estimates: Sequence[EstimateRecord],
    ground_truth: Sequence[GroundTruthEntry],
) -> tuple[list[int], list[Pose], list[Pose]]:
    if len(estimates) != len(ground_truth):
        raise LengthMismatch(
            "Estimate and ground-truth files hold different query counts",
            estimates=len(estimates),
            ground_truths=len(ground_truth),
        )
    estimated = sorted(estimates, key=lambda e: e.query_index)
    expected = sorted(ground_truth, key=lambda g: g.query_index)
    indices = [e.query_index for e in estimated]
    if indices != [g.query_index for g in expected]:
        raise LengthMismatch("Estimate and ground-truth files cover different queries", estimates=indices)
    return (
        indices,
        [Pose.from_list(e.pose) for e in estimated],
        [Pose.from_list(g.pose) for g in expected],
    )


def _check_query_matches(query: QueryMatches, labels: MatchLabels) -> np.ndarray:
    """IoU matrix of one matches.json entry, with every index checked against its shape."""
    shape = (labels.query_count, labels.map_count)
    if len(query.ious) != shape[0] or any(len(row) != shape[1] for row in query.ious):
        raise ShapeMismatch(
            "IoU matrix does not cover the labelled primitives",
            query=query.query_index,
            rows=[len(row) for row in query.ious],
            expected=list(shape),
        )
    pairs = [(p.query_idx, p.map_idx) for p in query.predictions] + list(labels.matches)
    for query_idx, map_idx in pairs:
        if not (0 <= query_idx < shape[0] and 0 <= map_idx < shape[1]):
            raise ShapeMismatch(
                "Match index outside the labelled primitives",
                query=query.query_index,
                pair=[query_idx, map_idx],
                expected=list(shape),
            )
    return np.array(query.ious, dtype=float).reshape(shape)


def pooled_match_metrics(queries: Sequence[QueryMatches], iou_min: float) -> MatchMetrics:
    """
    TP/#GT/#pred summed over queries; AP over all scored predictions together.

    Raises:
        ShapeMismatch: an entry's IoU list or match indices disagree with its label counts
    """
    outcomes = []
    ground_truth_count = 0
    for query in queries:
        if query.labels is None:
            continue
        labels = MatchLabels.from_dict(query.labels.model_dump())
        ious = _check_query_matches(query, labels)
        predictions = [(p.query_idx, p.map_idx, p.score) for p in query.predictions]
        outcomes.extend(match_outcomes(predictions, labels, ious, iou_min))
        ground_truth_count += len(labels.matches)
    return summarize_matches(outcomes, ground_truth_count)


def evaluate(
    estimates: Sequence[EstimateRecord],
    ground_truth: Sequence[GroundTruthEntry],
    matches: Optional[Sequence[QueryMatches]],
    cfg: EvaluationConfig,
) -> EvaluationReport:
    """
    Raises:
        LengthMismatch: estimates and ground truth do not cover the same queries
    """
    indices, estimated, expected = _paired(estimates, ground_truth)
    return EvaluationReport(
        query_indices=indices,
        pose=pose_metrics(estimated, expected, cfg.thresholds),
        matching=pooled_match_metrics(matches, cfg.iou_min) if matches is not None else None,
        failed_queries=sorted(e.query_index for e in estimates if e.failed_room),
    )


def _metric_rows(report: EvaluationReport) -> list[tuple[str, object]]:
    pose = report.pose
    rows: list[tuple[str, object]] = [
        ("queries", pose.count),
        ("rotation_deg_mean", pose.mean_rotation),
        ("rotation_deg_median", pose.median_rotation),
        ("translation_m_mean", pose.mean_translation),
        ("translation_m_median", pose.median_translation),
    ]
    rows += [
        (f"recall@{float(t.meters)}m_{float(t.degrees)}deg", r)
        for t, r in zip(pose.thresholds, pose.recalls)
    ]
    if report.matching is not None:
        rows += [(f"match_{key}", value) for key, value in report.matching.to_dict().items()]
    return rows


def write_reports(out_dir: Path, report: EvaluationReport) -> Path:
    """Write metrics.json, metrics.csv, pose_errors.csv and pr_curve.csv."""
    out_dir = Path(out_dir)
    write_json(
        out_dir / "metrics.json",
        MetricsFile(
            pose=report.pose.to_dict(),
            matching=report.matching.to_dict() if report.matching is not None else None,
            queries=len(report.query_indices),
            failed_queries=report.failed_queries,
        ),
    )
    write_csv(out_dir / "metrics.csv", ("metric", "value"), _metric_rows(report))
    write_csv(
        out_dir / "pose_errors.csv",
        ("query_index", "rotation_deg", "translation_m"),
        zip(report.query_indices, report.pose.rotation_errors, report.pose.translation_errors),
    )
    write_csv(
        out_dir / "pr_curve.csv",
        ("score", "precision", "recall"),
        report.matching.pr_curve if report.matching is not None else [],
    )
    logger.info(
        "Reports written",
        out=str(out_dir),
        recalls=report.pose.recalls,
        match_f1=report.matching.f1 if report.matching is not None else None,
    )
    return out_dir


def process_evaluate_job(
    estimates_path: Path,
    ground_truth_path: Path,
    cfg: EvaluationConfig,
    out_dir: Path,
    matches_path: Optional[Path] = None,
) -> EvaluationReport:
    """
    Score an estimates file against a ground-truth file.

    Raises:
        LengthMismatch: the files do not cover the same queries
        ParseError, VersionMismatch: malformed inputs
    """
    estimates = read_json(estimates_path, EstimatesFile).estimates
    ground_truth = read_json(ground_truth_path, GroundTruthFile).poses
    matches = read_json(matches_path, MatchesFile).queries if matches_path is not None else None
    report = evaluate(estimates, ground_truth, matches, cfg)
    write_reports(out_dir, report)
    return report
