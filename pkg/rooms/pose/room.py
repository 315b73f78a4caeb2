"""
PoseRoom - Stage 3 of the relocalization pipeline.

Turns correspondences into a camera-to-map pose and query scale. Each match is
paired with its recovered query plane and map plane and weighted by the query
mask area. Degenerate inputs never fail the query: the solver falls back to the
coarse-init heuristic. The final pose is clamped to the map bounds.
"""
import structlog

from config.experiment import SolverConfig
from rooms.base import BaseRoom, POSE_ROOM_CONFIG, QueryContext
from rooms.pose.tools.coarse_init import DEFAULT_CLAMP_MARGIN, clamp_pose_to_bounds, map_bounds
from rooms.pose.tools.estimator import estimate_pose
from rooms.pose.tools.rotation import PlaneCorrespondence
from services.geometry import Pose
from services.primitives import MapPrimitive

logger = structlog.get_logger()


class PoseRoom(BaseRoom):
    """
    Pose Room - robust pose and scale.

    Input: QueryContext with query_primitives and matches
    Output: QueryContext with estimate (PoseEstimate) and the clamped final_pose
    """

    config = POSE_ROOM_CONFIG

    def __init__(
        self,
        map_primitives: list[MapPrimitive],
        solver: SolverConfig,
        clamp_margin: float = DEFAULT_CLAMP_MARGIN,
    ):
        super().__init__(map_primitives)
        self.solver = solver
        self.clamp_margin = clamp_margin
        self.bounds = map_bounds(map_primitives) if map_primitives else None

    def correspondences(self, context: QueryContext) -> list[PlaneCorrespondence]:
        corrs = []
        for match in context.matches:
            query = context.query_primitives[match.query_index]
            target = self.map_primitives[match.map_index]
            corrs.append(
                PlaneCorrespondence(
                    query_plane=query.plane,
                    map_plane=target.plane,
                    weight=float(query.area),
                    query_index=match.query_index,
                    map_index=match.map_index,
                )
            )
        return corrs

    def clamp(self, pose: Pose) -> Pose:
        if self.bounds is None:
            return pose
        return clamp_pose_to_bounds(pose, self.bounds, self.clamp_margin)

    def process(self, context: QueryContext) -> QueryContext:
        cfg = self.solver.model_copy(update={"rng_seed": context.child_seed(self.solver.rng_seed)})
        estimate = estimate_pose(self.correspondences(context), cfg, self.map_by_index)
        context.estimate = estimate
        context.final_pose = self.clamp(estimate.pose)
        logger.info(
            "Pose estimated",
            query=context.query_index,
            inliers=len(estimate.inliers),
            scale=round(estimate.scale, 6),
            fallback_used=estimate.fallback_used,
            reason=estimate.reason,
        )
        return context
