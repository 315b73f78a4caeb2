"""
Relocalize Task Processor

Runs every query of a scene directory through the rooms:

    extraction -> matching -> pose -> refinement (optional)

then scores the final poses and matches. Queries run in a worker pool; each gets
its own seed derived from (config seed, query index), so results do not depend on
the pool size or on scheduling order.

A room failure never aborts the run: the query continues with whatever the
failed room left (no primitives or no matches), the pose room falls back to its
coarse heuristic, and the failure is recorded in the estimate.
"""
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np
import structlog

from config.experiment import EvaluationConfig, ExperimentConfig
from rooms.base import QueryContext
from rooms.extraction.room import ExtractionRoom
from rooms.matching.room import MatchingRoom
from rooms.matching.tools.embeddings import (
    EmbeddingProvider,
    FileEmbeddingProvider,
    SyntheticEmbeddingProvider,
)
from rooms.matching.tools.labels import MatchLabels, iou_matrix, labels_from_ious, projected_map_masks
from rooms.matching.tools.matcher import PlaneMatcher
from rooms.pose.room import PoseRoom
from rooms.refinement.room import RefinementRoom
from schemas.results import (
    CorrespondenceSchema,
    EstimateFile,
    EstimateRecord,
    EstimatesFile,
    GroundTruthEntry,
    GroundTruthFile,
    MatchesFile,
    QueryMatches,
)
from services.primitives import MapPrimitive
from services.storage import load_weights_payload, write_csv, write_json
from simulation.scene import QueryRecord
from simulation.scene_io import labels_schema, load_scene, query_dir_name
from worker.pool import run_in_order
from worker.tasks.evaluate import EvaluationReport, evaluate, write_reports

logger = structlog.get_logger()


def query_seed(seed: int, query_index: int) -> int:
    """Per-query seed, a pure function of the run seed and the query index."""
    return int(np.random.SeedSequence([seed, query_index]).generate_state(1)[0])


@dataclass
class QueryOutcome:
    """A processed query plus the labels its predictions are scored against."""
    context: QueryContext
    labels: MatchLabels
    ious: np.ndarray

    def estimate_record(self) -> EstimateRecord:
        context = self.context
        estimate = context.estimate
        return EstimateRecord(
            query_index=context.query_index,
            pose=context.final_pose.to_list(),
            scale=estimate.scale,
            inlier_indices=list(estimate.inliers),
            degenerate=estimate.degenerate,
            fallback_used=estimate.fallback_used,
            refined=context.refinement is not None,
            failed_room=context.failed_room,
            refinement=context.refinement.to_dict() if context.refinement is not None else None,
        )

    def query_matches(self) -> QueryMatches:
        return QueryMatches(
            query_index=self.context.query_index,
            predictions=[
                CorrespondenceSchema(query_idx=m.query_index, map_idx=m.map_index, score=float(m.score))
                for m in self.context.matches or []
            ],
            labels=labels_schema(self.labels),
            ious=self.ious.tolist(),
        )


class RelocalizationPipeline:
    """The four rooms configured for one experiment and one map."""

    def __init__(self, cfg: ExperimentConfig, map_primitives: list[MapPrimitive]):
        self.cfg = cfg
        self.map_primitives = map_primitives
        self.extraction = ExtractionRoom(map_primitives, cfg.ransac)
        self.matching = MatchingRoom(
            map_primitives,
            cfg.matching,
            provider=self._provider(),
            matcher=self._matcher(),
            oracle_labels=cfg.oracle_labels,
        )
        self.pose = PoseRoom(map_primitives, cfg.solver, cfg.clamp_margin)
        self.refinement = (
            RefinementRoom(map_primitives, cfg.refinement, cfg.clamp_margin) if cfg.refine else None
        )

    def _provider(self) -> Optional[EmbeddingProvider]:
        if self.cfg.oracle_labels:
            return None
        if self.cfg.synthetic_embeddings:
            return SyntheticEmbeddingProvider(self.cfg.matching)
        return FileEmbeddingProvider(self.cfg.embeddings_root)

    def _matcher(self) -> Optional[PlaneMatcher]:
        if self.cfg.oracle_labels or self.cfg.weights is None:
            return None
        matcher = PlaneMatcher.from_payload(load_weights_payload(self.cfg.weights))
        logger.info("Matcher weights loaded", path=str(self.cfg.weights))
        return matcher

    @staticmethod
    def _detach_failure(context: QueryContext) -> Optional[tuple[str, str]]:
        """Clear an upstream failure so the pose room can still produce a fallback pose."""
        if not context.failed:
            return None
        failure = (context.failed_room, context.error)
        context.failed_room = context.error = None
        if context.query_primitives is None:
            context.query_primitives = []
        context.matches = []
        return failure

    def scoring_labels(self, record: QueryRecord, context: QueryContext) -> tuple[MatchLabels, np.ndarray]:
        """Labels of the extracted primitives at the ground-truth pose, with their IoU matrix."""
        map_masks = projected_map_masks(self.map_primitives, record.gt_pose, record.intrinsics)
        ious = iou_matrix([p.mask for p in context.query_primitives], map_masks)
        return labels_from_ious(ious, self.cfg.matching.tau_star), ious

    def run_query(self, record: QueryRecord) -> QueryOutcome:
        context = QueryContext(
            query_index=record.index,
            intrinsics=record.intrinsics,
            depth=record.depth,
            seed=query_seed(self.cfg.seed, record.index),
            gt_pose=record.gt_pose,
        )
        context = self.extraction.execute(context)
        context = self.matching.execute(context)
        failure = self._detach_failure(context)

        context = self.pose.execute(context)
        if self.refinement is not None and context.query_primitives and not context.failed:
            context = self.refinement.execute(context)

        if failure is not None and not context.failed:
            context.failed_room, context.error = failure

        labels, ious = self.scoring_labels(record, context)
        return QueryOutcome(context=context, labels=labels, ious=ious)


def _write_query_outputs(out_dir: Path, outcome: QueryOutcome) -> None:
    name = query_dir_name(outcome.context.query_index)
    write_json(out_dir / "estimates" / f"{name}.json", EstimateFile(estimate=outcome.estimate_record()))
    refinement = outcome.context.refinement
    if refinement is not None:
        write_csv(
            out_dir / "cost_traces" / f"{name}.csv",
            ("iteration", "cost"),
            enumerate(float(c) for c in refinement.cost_trace),
        )


def process_relocalize_job(cfg: ExperimentConfig) -> EvaluationReport:
    """
    Relocalize every query of `cfg.scene_dir` and write estimates and reports.

    Raises:
        ParseError, VersionMismatch, OSError: unreadable scene, weights or embeddings
    """
    map_primitives, records = load_scene(cfg.scene_dir, limit=cfg.query_limit)
    logger.info(
        "Processing relocalize job",
        scene=str(cfg.scene_dir),
        queries=len(records),
        primitives=len(map_primitives),
        threads=cfg.threads,
        refine=cfg.refine,
    )
    pipeline = RelocalizationPipeline(cfg, map_primitives)
    outcomes = run_in_order(pipeline.run_query, records, cfg.threads)

    out_dir = Path(cfg.output_dir)
    for outcome in outcomes:
        _write_query_outputs(out_dir, outcome)

    estimates = [o.estimate_record() for o in outcomes]
    ground_truth = [GroundTruthEntry(query_index=r.index, pose=r.gt_pose.to_list()) for r in records]
    matches = [o.query_matches() for o in outcomes]
    write_json(out_dir / "estimates.json", EstimatesFile(estimates=estimates))
    write_json(out_dir / "ground_truth.json", GroundTruthFile(poses=ground_truth))
    write_json(out_dir / "matches.json", MatchesFile(queries=matches))

    report = evaluate(
        estimates,
        ground_truth,
        matches,
        EvaluationConfig(thresholds=cfg.thresholds, iou_min=cfg.matching.iou_min),
    )
    write_reports(out_dir, report)
    return report
