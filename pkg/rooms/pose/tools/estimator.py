"""
Robust camera pose from plane correspondences.

rotation RANSAC → weighted Kabsch → weighted least-squares (t, s). Any degeneracy
along the way falls back to the coarse-init heuristic over the map primitives the
correspondences point at, so every query gets a pose.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence

import numpy as np
import structlog

from config.experiment import SolverConfig
from services.errors import (
    AllPairsParallel,
    DegenerateNormals,
    InsufficientCorrespondences,
    ParallelNormals,
    RankDeficient,
)
from services.geometry import Pose
from services.primitives import MapPrimitive
from rooms.pose.tools.coarse_init import coarse_init_heuristic
from rooms.pose.tools.rotation import PlaneCorrespondence, ransac_rotation, refine_rotation
from rooms.pose.tools.translation import solve_translation_scale

logger = structlog.get_logger()

DEGENERACIES = (
    InsufficientCorrespondences,
    AllPairsParallel,
    ParallelNormals,
    DegenerateNormals,
    RankDeficient,
)


@dataclass
class PoseEstimate:
    pose: Pose
    scale: float
    inliers: list[int] = field(default_factory=list)
    degenerate: bool = False
    fallback_used: bool = False
    scale_fixed: bool = False
    reason: Optional[str] = None

    def to_dict(self) -> dict:
        return {
            "pose": self.pose.to_list(),
            "scale": self.scale,
            "inlier_indices": list(self.inliers),
            "degenerate": self.degenerate,
            "fallback_used": self.fallback_used,
        }


def _fallback(
    corrs: Sequence[PlaneCorrespondence],
    map_primitives: Mapping[int, MapPrimitive],
    reason: str,
) -> PoseEstimate:
    referenced = sorted({c.map_index for c in corrs if c.map_index in map_primitives})
    chosen = [map_primitives[j] for j in referenced] or list(map_primitives.values())
    logger.warning(
        "Pose solver degenerate, using coarse init",
        reason=reason,
        correspondences=len(corrs),
        primitives=len(chosen),
    )
    return PoseEstimate(
        pose=coarse_init_heuristic(chosen),
        scale=1.0,
        degenerate=True,
        fallback_used=True,
        reason=reason,
    )


def estimate_pose(
    corrs: Sequence[PlaneCorrespondence],
    cfg: SolverConfig,
    map_primitives: Mapping[int, MapPrimitive],
) -> PoseEstimate:
    """
    Estimate the camera-to-map pose and the query scale.

    Args:
        corrs: putative correspondences (map_index keys into `map_primitives`)
        cfg: solver settings, including the RANSAC and scale ablation switches
        map_primitives: map primitives by index, used by the fallback

    Returns:
        PoseEstimate; `degenerate`/`fallback_used` mark heuristic output
    """
    try:
        if cfg.use_ransac:
            inliers, _ = ransac_rotation(corrs, cfg)
        else:
            if len(corrs) < 2:
                raise InsufficientCorrespondences("Need at least 2 correspondences", count=len(corrs))
            inliers = list(range(len(corrs)))
        chosen = [corrs[k] for k in inliers]
        rotation = refine_rotation(chosen)
        solved = solve_translation_scale(chosen, estimate_scale=cfg.estimate_scale)
    except DEGENERACIES as exc:
        return _fallback(corrs, map_primitives, exc.code)

    if not solved.scale > 0 or not np.all(np.isfinite(solved.translation)):
        return _fallback(corrs, map_primitives, "nonpositive_scale")

    return PoseEstimate(
        pose=Pose(rotation, solved.translation),
        scale=solved.scale,
        inliers=inliers,
        scale_fixed=solved.scale_fixed,
    )
