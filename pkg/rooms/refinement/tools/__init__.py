from rooms.refinement.tools.alignment import (
    cost_gradient,
    depth_cost,
    offset_seeded_depth,
    per_primitive_residual,
    warp_primitive,
)
from rooms.refinement.tools.optimizer import RefinementResult, refine_pose

__all__ = [
    "cost_gradient",
    "depth_cost",
    "offset_seeded_depth",
    "per_primitive_residual",
    "warp_primitive",
    "RefinementResult",
    "refine_pose",
]
