"""
Matching Room Tools.

- rope: rotary embeddings driven by plane-normal differences
- assignment: dual-softmax assignment matrix and mutual-nearest-neighbor extraction
- matcher: the self/cross attention matcher and its weight payloads
- labels: ground-truth labels from projected-mask IoU
- loss: per-layer matching loss

Embedding providers live in rooms.matching.tools.embeddings.
"""

from rooms.matching.tools.assignment import (
    AssignmentMatrix,
    Correspondence,
    assignment_matrix,
    extract_correspondences,
    raw_similarity_assignment,
)
from rooms.matching.tools.labels import MatchLabels, generate_labels, iou_matrix
from rooms.matching.tools.loss import matching_loss
from rooms.matching.tools.matcher import PlaneMatcher, matcher_forward
from rooms.matching.tools.rope import apply_rope, rope_angles, rope_matrix

__all__ = [
    "AssignmentMatrix",
    "Correspondence",
    "assignment_matrix",
    "extract_correspondences",
    "raw_similarity_assignment",
    "MatchLabels",
    "generate_labels",
    "iou_matrix",
    "matching_loss",
    "PlaneMatcher",
    "matcher_forward",
    "apply_rope",
    "rope_angles",
    "rope_matrix",
]
