"""
Ground-truth match labels from projected-mask overlap.

Every map primitive is rendered at the ground-truth pose; a query primitive is
paired with the map primitive whose visible projection overlaps its mask with the
highest IoU, provided the IoU reaches τ*. Several query primitives may share one
map primitive.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import structlog

from services.camera import DepthMap
from services.errors import DimensionMismatch
from services.geometry import Intrinsics, Pose, invert
from services.primitives import MapPrimitive, QueryPrimitive
from services.rendering import rasterize_primitive, render_depth

logger = structlog.get_logger()

# A projected pixel belongs to a primitive when its depth is this close to the z-buffer
OCCLUSION_TOLERANCE = 0.01


@dataclass(frozen=True)
class MatchLabels:
    """Ground-truth pairs M* plus the unmatchable sets on each side."""
    matches: tuple[tuple[int, int], ...]
    unmatched_query: tuple[int, ...]
    unmatched_map: tuple[int, ...]
    query_count: int
    map_count: int
    ious: tuple[float, ...] = field(default=(), compare=False)

    def __post_init__(self):
        query_side = [i for i, _ in self.matches]
        if len(set(query_side)) != len(query_side):
            raise ValueError("A query primitive is paired more than once")
        if set(query_side) & set(self.unmatched_query):
            raise ValueError("Query index is both matched and unmatchable")
        if {j for _, j in self.matches} & set(self.unmatched_map):
            raise ValueError("Map index is both matched and unmatchable")

    def map_for(self, query_index: int) -> int | None:
        return dict(self.matches).get(query_index)

    def to_dict(self) -> dict:
        return {
            "matches": [[i, j] for i, j in self.matches],
            "unmatched_query": list(self.unmatched_query),
            "unmatched_map": list(self.unmatched_map),
            "query_count": self.query_count,
            "map_count": self.map_count,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "MatchLabels":
        return cls(
            matches=tuple((int(i), int(j)) for i, j in data["matches"]),
            unmatched_query=tuple(int(i) for i in data["unmatched_query"]),
            unmatched_map=tuple(int(j) for j in data["unmatched_map"]),
            query_count=int(data["query_count"]),
            map_count=int(data["map_count"]),
        )


def mask_iou(a: np.ndarray, b: np.ndarray) -> float:
    """|a ∩ b| / |a ∪ b|, 0 for an empty union."""
    a, b = np.asarray(a, dtype=bool), np.asarray(b, dtype=bool)
    if a.shape != b.shape:
        raise DimensionMismatch("Masks differ in shape", a=list(a.shape), b=list(b.shape))
    union = np.logical_or(a, b).sum()
    if union == 0:
        return 0.0
    return float(np.logical_and(a, b).sum() / union)


def iou_matrix(query_masks: Sequence[np.ndarray], map_masks: Sequence[np.ndarray]) -> np.ndarray:
    """IoU of every query mask against every map mask, shape (Nq, Nm)."""
    if not query_masks or not map_masks:
        return np.zeros((len(query_masks), len(map_masks)))
    q = np.stack([np.asarray(m, dtype=bool).ravel() for m in query_masks]).astype(float)
    m = np.stack([np.asarray(m, dtype=bool).ravel() for m in map_masks]).astype(float)
    if q.shape[1] != m.shape[1]:
        raise DimensionMismatch("Masks differ in shape", query=q.shape[1], map=m.shape[1])
    intersection = q @ m.T
    union = q.sum(axis=1)[:, None] + m.sum(axis=1)[None, :] - intersection
    with np.errstate(invalid="ignore", divide="ignore"):
        return np.where(union > 0, intersection / union, 0.0)


def project_primitive_mask(
    primitive: MapPrimitive,
    pose: Pose,
    K: Intrinsics,
    zbuffer: DepthMap,
) -> np.ndarray:
    """
    Visible projection of a map primitive as an H×W mask.

    Covered pixels are kept only where the primitive is the front-most surface of
    `zbuffer`. A primitive entirely behind the camera or off-image yields an
    empty mask.
    """
    mask = np.zeros((K.height, K.width), dtype=bool)
    pixels, depths = rasterize_primitive(primitive, invert(pose), K)
    if len(pixels) == 0:
        return mask
    xs, ys = pixels[:, 0], pixels[:, 1]
    front = zbuffer.valid_mask[ys, xs] & (np.abs(zbuffer.values[ys, xs] - depths) <= OCCLUSION_TOLERANCE)
    mask[ys[front], xs[front]] = True
    return mask


def projected_map_masks(
    map_primitives: Sequence[MapPrimitive],
    pose: Pose,
    K: Intrinsics,
) -> list[np.ndarray]:
    """Visible masks of all map primitives from one pose (single z-buffer)."""
    zbuffer = render_depth(map_primitives, pose, K)
    return [project_primitive_mask(p, pose, K, zbuffer) for p in map_primitives]


def labels_from_ious(ious: np.ndarray, tau_star: float) -> MatchLabels:
    """Pair each query row with its best column when IoU ≥ τ*."""
    query_count, map_count = ious.shape
    matches, unmatched_query, best = [], [], []
    for i in range(query_count):
        j = int(np.argmax(ious[i])) if map_count else -1
        if map_count and ious[i, j] >= tau_star:
            matches.append((i, j))
            best.append(float(ious[i, j]))
        else:
            unmatched_query.append(i)
    reached = (ious >= tau_star).any(axis=0) if query_count else np.zeros(map_count, dtype=bool)
    unmatched_map = [j for j in range(map_count) if not reached[j]]
    return MatchLabels(
        matches=tuple(matches),
        unmatched_query=tuple(unmatched_query),
        unmatched_map=tuple(unmatched_map),
        query_count=query_count,
        map_count=map_count,
        ious=tuple(best),
    )


def generate_labels(
    query_primitives: Sequence[QueryPrimitive],
    map_primitives: Sequence[MapPrimitive],
    gt_pose: Pose,
    K: Intrinsics,
    tau_star: float,
) -> MatchLabels:
    """Ground-truth labels for one query against the map."""
    map_masks = projected_map_masks(map_primitives, gt_pose, K)
    ious = iou_matrix([q.mask for q in query_primitives], map_masks)
    labels = labels_from_ious(ious, tau_star)
    logger.debug(
        "Labels generated",
        matched=len(labels.matches),
        unmatched_query=len(labels.unmatched_query),
        unmatched_map=len(labels.unmatched_map),
    )
    return labels
