"""
Heuristic pose from map primitives alone, and clamping poses to the map bounds.
"""
from typing import Sequence

import numpy as np

from services.geometry import Pose, look_at
from services.primitives import MapPrimitive

# Camera stand-off from each primitive along its normal (meters)
STANDOFF = 2.0

DEFAULT_CLAMP_MARGIN = 0.5


def coarse_init_heuristic(primitives: Sequence[MapPrimitive]) -> Pose:
    """
    Camera looking along the negated mean normal, centered on the primitives'
    centroids pushed 2 m out along their normals.
    """
    if not primitives:
        raise ValueError("Coarse initialization needs at least one primitive")
    normals = np.array([p.plane.normal for p in primitives])
    mean_normal = normals.mean(axis=0)
    if np.linalg.norm(mean_normal) < 1e-9:
        # Opposing normals cancel; look at the first primitive instead
        mean_normal = normals[0]
    center = np.mean([p.centroid + STANDOFF * p.plane.normal for p in primitives], axis=0)
    return look_at(center, -mean_normal)


def map_bounds(primitives: Sequence[MapPrimitive]) -> tuple[np.ndarray, np.ndarray]:
    """Axis-aligned bounding box of all primitive boundaries."""
    vertices = np.concatenate([p.boundary for p in primitives])
    return vertices.min(axis=0), vertices.max(axis=0)


def clamp_pose_to_bounds(
    pose: Pose,
    bounds: tuple[np.ndarray, np.ndarray],
    margin: float = DEFAULT_CLAMP_MARGIN,
) -> Pose:
    """Clamp the translation into the box grown by `margin`; rotation is untouched."""
    low, high = (np.asarray(b, dtype=float) for b in bounds)
    return Pose(pose.rotation, np.clip(pose.translation, low - margin, high + margin))
