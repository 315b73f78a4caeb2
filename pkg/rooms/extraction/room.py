"""
ExtractionRoom - Stage 1 of the relocalization pipeline.

Recovers camera-frame planar primitives from the query depth map. RANSAC may run
on a strided copy of the depth (`RansacConfig.downsample`); masks are then carried
back to full resolution by nearest-pixel lookup, restricted to valid depth.
"""
import numpy as np
import structlog

from config.experiment import RansacConfig
from rooms.base import BaseRoom, EXTRACTION_ROOM_CONFIG, QueryContext
from rooms.extraction.tools.point_cloud import unproject_depth
from rooms.extraction.tools.sequential_ransac import sequential_ransac_depth
from services.camera import DepthMap
from services.geometry import Intrinsics
from services.primitives import MapPrimitive, QueryPrimitive

logger = structlog.get_logger()


def upsample_mask(mask: np.ndarray, factor: int, height: int, width: int) -> np.ndarray:
    """Nearest-pixel lookup of a strided mask at full resolution."""
    if factor == 1:
        return mask
    rows = np.minimum(np.rint(np.arange(height) / factor).astype(int), mask.shape[0] - 1)
    cols = np.minimum(np.rint(np.arange(width) / factor).astype(int), mask.shape[1] - 1)
    return mask[np.ix_(rows, cols)]


def extract_query_primitives(depth: DepthMap, K: Intrinsics, cfg: RansacConfig) -> list[QueryPrimitive]:
    """
    Planar primitives of a depth map at its own resolution.

    Raises:
        NoPlaneFound: when the first RANSAC round finds no consensus
    """
    factor = cfg.downsample
    cloud = unproject_depth(depth.downsampled(factor), K.downsampled(factor), cfg.normal_radius)
    primitives = sequential_ransac_depth(cloud, cfg)
    if factor == 1:
        return primitives

    valid = depth.valid_mask
    return [
        QueryPrimitive(
            plane=p.plane,
            mask=upsample_mask(p.mask, factor, depth.height, depth.width) & valid,
            index=p.index,
        )
        for p in primitives
    ]


class ExtractionRoom(BaseRoom):
    """
    Extraction Room - planar primitives from depth.

    Input: QueryContext with depth
    Output: QueryContext with query_primitives
    """

    config = EXTRACTION_ROOM_CONFIG

    def __init__(self, map_primitives: list[MapPrimitive], ransac: RansacConfig):
        super().__init__(map_primitives)
        self.ransac = ransac

    def process(self, context: QueryContext) -> QueryContext:
        cfg = self.ransac.model_copy(update={"rng_seed": context.child_seed(self.ransac.rng_seed)})
        context.query_primitives = extract_query_primitives(context.depth, context.intrinsics, cfg)
        logger.info(
            "Query primitives extracted",
            query=context.query_index,
            count=len(context.query_primitives),
            pixels=sum(p.area for p in context.query_primitives),
        )
        return context
