"""
Unit tests for pose and plane-matching metrics.
"""
import math

import numpy as np
import pytest
from scipy.spatial.transform import Rotation

from config.experiment import RecallThreshold
from rooms.matching.tools.labels import MatchLabels
from services.errors import LengthMismatch
from services.geometry import Pose
from services.metrics import (
    MatchOutcome,
    match_metrics,
    pose_metrics,
    precision_recall_curve,
    summarize_matches,
)


def pose_with_error(degrees: float, meters: float) -> Pose:
    rotation = Rotation.from_rotvec(math.radians(degrees) * np.array([0.0, 0.0, 1.0])).as_matrix()
    return Pose(rotation, np.array([meters, 0.0, 0.0]))


def two_pair_labels():
    return MatchLabels(
        matches=((0, 0), (1, 1)),
        unmatched_query=(2,),
        unmatched_map=(2,),
        query_count=3,
        map_count=3,
    )


# =====================
# Pose Metric Tests
# =====================

class TestPoseMetrics:
    """Tests for pose errors and recall."""

    def test_perfect(self, random_pose):
        """Test identical poses give zero errors and full recall."""
        metrics = pose_metrics([random_pose] * 3, [random_pose] * 3)
        assert metrics.rotation_errors == pytest.approx([0.0] * 3, abs=1e-5)
        assert metrics.translation_errors == [0.0] * 3
        assert metrics.recalls == [1.0, 1.0, 1.0]

    def test_boundary_inclusive(self):
        """Test an error exactly at the threshold counts as recalled."""
        metrics = pose_metrics(
            [pose_with_error(0.0, 0.05)],
            [Pose.identity()],
            [RecallThreshold(meters=0.05, degrees=5.0)],
        )
        assert metrics.translation_errors == [pytest.approx(0.05)]
        assert metrics.recalls == [1.0]

    def test_hand_counted(self):
        """Test recalls on four queries with known errors."""
        errors = [(1.0, 0.01), (3.0, 0.07), (15.0, 0.2), (1.0, 1.0)]
        metrics = pose_metrics([pose_with_error(r, t) for r, t in errors], [Pose.identity()] * 4)
        assert metrics.recalls == [0.25, 0.5, 0.75]
        assert metrics.rotation_errors == pytest.approx([1.0, 3.0, 15.0, 1.0], abs=1e-6)
        assert metrics.median_rotation == pytest.approx(2.0, abs=1e-6)
        assert metrics.mean_translation == pytest.approx(0.32)

    def test_length_mismatch(self):
        """Test lists of different length raise LengthMismatch."""
        with pytest.raises(LengthMismatch):
            pose_metrics([Pose.identity()], [])

    def test_empty(self):
        """Test no queries give zero recall."""
        metrics = pose_metrics([], [])
        assert metrics.count == 0
        assert metrics.recalls == [0.0, 0.0, 0.0]

    def test_to_dict(self):
        """Test the summary carries every threshold pair."""
        summary = pose_metrics([Pose.identity()], [Pose.identity()]).to_dict()
        assert summary["count"] == 1
        assert [(r["meters"], r["degrees"]) for r in summary["recall"]] == [(0.05, 5.0), (0.1, 10.0), (0.25, 20.0)]


# =====================
# Match Metric Tests
# =====================

class TestMatchMetrics:
    """Tests for plane-matching precision, recall, F1 and AP."""

    def test_perfect(self):
        """Test predicting exactly the labels at full IoU scores 1 on every metric."""
        metrics = match_metrics([(0, 0, 0.9), (1, 1, 0.8)], two_pair_labels(), np.eye(3))
        assert metrics.precision == 1.0
        assert metrics.recall == 1.0
        assert metrics.f1 == 1.0
        assert metrics.average_precision == pytest.approx(1.0)

    def test_empty_predictions(self):
        """Test no predictions give zero precision, recall and AP."""
        metrics = match_metrics([], two_pair_labels(), np.eye(3))
        assert (metrics.precision, metrics.recall, metrics.f1, metrics.average_precision) == (0.0, 0.0, 0.0, 0.0)

    def test_staircase_ap(self):
        """Test scores {0.9 TP, 0.8 FP, 0.7 TP} give P = 2/3, R = 1, AP = 5/6."""
        predictions = [(0, 0, 0.9), (2, 2, 0.8), (1, 1, 0.7)]
        metrics = match_metrics(predictions, two_pair_labels(), np.eye(3))
        assert metrics.precision == pytest.approx(2.0 / 3.0)
        assert metrics.recall == 1.0
        assert metrics.f1 == pytest.approx(0.8)
        assert metrics.average_precision == pytest.approx(5.0 / 6.0)

    def test_low_iou_not_true_positive(self):
        """Test a labelled pair whose mask IoU is below iou_min is a false positive."""
        ious = np.diag([1.0, 0.2, 0.0])
        metrics = match_metrics([(0, 0, 0.9), (1, 1, 0.8)], two_pair_labels(), ious, iou_min=0.3)
        assert metrics.true_positives == 1

    def test_wrong_map_index(self):
        """Test pairing a query with the wrong map primitive is a false positive."""
        metrics = match_metrics([(0, 1, 0.9)], two_pair_labels(), np.ones((3, 3)))
        assert metrics.true_positives == 0
        assert metrics.prediction_count == 1

    def test_tied_scores_enter_together(self):
        """Test equal scores form a single point on the curve."""
        outcomes = [MatchOutcome(0.5, True), MatchOutcome(0.5, False), MatchOutcome(0.4, True)]
        curve = precision_recall_curve(outcomes, 2)
        assert curve == [(0.5, 0.5, 0.5), (0.4, pytest.approx(2.0 / 3.0), 1.0)]

    def test_pooled_summary(self):
        """Test outcomes pooled over queries are summarized together."""
        metrics = summarize_matches([MatchOutcome(0.9, True), MatchOutcome(0.3, True)], 4)
        assert metrics.recall == 0.5
        assert metrics.precision == 1.0
        assert metrics.average_precision == pytest.approx(0.5)
        assert metrics.to_dict()["gt"] == 4
