from rooms.pose.tools.coarse_init import clamp_pose_to_bounds, coarse_init_heuristic, map_bounds
from rooms.pose.tools.estimator import PoseEstimate, estimate_pose
from rooms.pose.tools.rotation import (
    PlaneCorrespondence,
    minimal_rotation,
    ransac_rotation,
    refine_rotation,
)
from rooms.pose.tools.translation import TranslationScale, solve_translation_scale

__all__ = [
    "clamp_pose_to_bounds",
    "coarse_init_heuristic",
    "map_bounds",
    "PoseEstimate",
    "estimate_pose",
    "PlaneCorrespondence",
    "minimal_rotation",
    "ransac_rotation",
    "refine_rotation",
    "TranslationScale",
    "solve_translation_scale",
]
