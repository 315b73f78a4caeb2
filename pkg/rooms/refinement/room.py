"""
RefinementRoom - Stage 4 of the relocalization pipeline (optional, `--refine`).

Query plane offsets are first brought to metric scale with the solver's scale
estimate; the offset seeds then only absorb the residual per-primitive error.
"""
import structlog

from config.experiment import RefineConfig
from rooms.base import BaseRoom, QueryContext, REFINEMENT_ROOM_CONFIG
from rooms.pose.tools.coarse_init import DEFAULT_CLAMP_MARGIN, clamp_pose_to_bounds, map_bounds
from rooms.refinement.tools.optimizer import refine_pose
from services.primitives import MapPrimitive, QueryPrimitive

logger = structlog.get_logger()


class RefinementRoom(BaseRoom):
    """
    Refinement Room - depth alignment against the map rendered at P₀.

    Input: QueryContext with query_primitives and estimate
    Output: QueryContext with refinement (RefinementResult) and the clamped final_pose
    """

    config = REFINEMENT_ROOM_CONFIG

    def __init__(
        self,
        map_primitives: list[MapPrimitive],
        refine: RefineConfig,
        clamp_margin: float = DEFAULT_CLAMP_MARGIN,
    ):
        super().__init__(map_primitives)
        self.refine = refine
        self.clamp_margin = clamp_margin
        self.bounds = map_bounds(map_primitives) if map_primitives else None

    def process(self, context: QueryContext) -> QueryContext:
        scale = context.estimate.scale
        metric = [
            QueryPrimitive(plane=p.plane.scaled_offset(scale), mask=p.mask, index=p.index)
            for p in context.query_primitives
        ]
        cfg = self.refine.model_copy(update={"rng_seed": context.child_seed(self.refine.rng_seed)})
        result = refine_pose(context.estimate.pose, metric, self.map_primitives, context.intrinsics, cfg)
        context.refinement = result
        pose = result.pose
        if self.bounds is not None:
            pose = clamp_pose_to_bounds(pose, self.bounds, self.clamp_margin)
        context.final_pose = pose
        logger.info(
            "Pose refined",
            query=context.query_index,
            initial_cost=result.initial_cost,
            final_cost=result.final_cost,
            accepted=result.accepted,
            no_overlap=result.no_overlap,
        )
        return context
