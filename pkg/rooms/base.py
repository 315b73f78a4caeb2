"""
BaseRoom - Abstract base class for all relocalization pipeline stages.

Each room in the pipeline:
- Reads the fields it needs from a per-query QueryContext
- Checks that the previous stages produced them
- Runs its stage math from its tools/ package
- Writes its outputs back onto the context
"""
import time
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import Any, Optional

import numpy as np
import structlog

from services.camera import DepthMap
from services.errors import PlaneLocError
from services.geometry import Intrinsics, Pose
from services.primitives import MapPrimitive, QueryPrimitive

logger = structlog.get_logger()


@dataclass
class RoomConfig:
    """Configuration for a pipeline room."""
    name: str                          # Room name (e.g., 'extraction')
    description: str                   # One-line summary for logs and manifests
    requires: tuple[str, ...] = ()     # QueryContext fields that must be set on entry
    produces: tuple[str, ...] = ()     # QueryContext fields set on success


# Pre-defined room configurations
EXTRACTION_ROOM_CONFIG = RoomConfig(
    name="extraction",
    description="Sequential RANSAC planar primitives from the query depth map",
    requires=("depth",),
    produces=("query_primitives",),
)

MATCHING_ROOM_CONFIG = RoomConfig(
    name="matching",
    description="Plane correspondences from embeddings or oracle labels",
    requires=("query_primitives",),
    produces=("matches",),
)

POSE_ROOM_CONFIG = RoomConfig(
    name="pose",
    description="Robust pose and scale from plane correspondences",
    requires=("query_primitives", "matches"),
    produces=("estimate", "final_pose"),
)

REFINEMENT_ROOM_CONFIG = RoomConfig(
    name="refinement",
    description="Depth alignment of query primitives against the rendered map",
    requires=("query_primitives", "estimate"),
    produces=("refinement", "final_pose"),
)


@dataclass
class QueryContext:
    """Everything known about one query as it moves through the rooms."""
    query_index: int
    intrinsics: Intrinsics
    depth: DepthMap
    seed: int
    gt_pose: Optional[Pose] = None
    query_primitives: Optional[list[QueryPrimitive]] = None
    matches: Optional[list] = None
    labels: Optional[Any] = None
    estimate: Optional[Any] = None
    refinement: Optional[Any] = None
    final_pose: Optional[Pose] = None
    failed_room: Optional[str] = None
    error: Optional[str] = None
    timings: dict[str, int] = field(default_factory=dict)

    @property
    def failed(self) -> bool:
        return self.failed_room is not None

    def child_seed(self, salt: int) -> int:
        """Stage-local seed derived from the query seed."""
        return int(np.random.SeedSequence([self.seed, salt]).generate_state(1)[0])


class BaseRoom(ABC):
    """
    Abstract base class for pipeline rooms.

    Each room:
    - Receives a QueryContext from the previous room
    - Validates that the context can enter the room
    - Processes it with the stage tools
    - Records timing, or the failure that stopped the query
    """

    config: RoomConfig

    def __init__(self, map_primitives: list[MapPrimitive]):
        """
        Initialize the room.

        Args:
            map_primitives: the scene map, shared read-only by every query
        """
        self.map_primitives = map_primitives
        self.map_by_index = {p.index: p for p in map_primitives}

    @abstractmethod
    def process(self, context: QueryContext) -> QueryContext:
        """
        Run this room's stage on one query.

        Args:
            context: query state produced by the previous rooms

        Returns:
            QueryContext: the same context with this room's outputs set
        """
        pass

    def validate_entry(self, context: QueryContext) -> bool:
        """
        Check if the query can enter this room.

        Args:
            context: query state

        Returns:
            True if every required field is set and no earlier room failed
        """
        if context.failed:
            return False
        missing = [name for name in self.config.requires if getattr(context, name) is None]
        if missing:
            logger.warning(
                "Query cannot enter room",
                room=self.config.name,
                query=context.query_index,
                missing=missing,
            )
            return False
        return True

    def on_entry(self, context: QueryContext) -> None:
        logger.debug("Query entered room", room=self.config.name, query=context.query_index)

    def on_success(self, context: QueryContext, duration_ms: int) -> QueryContext:
        """
        Handle successful processing.

        Args:
            context: processed query state
            duration_ms: wall time spent in process()

        Returns:
            Updated context
        """
        context.timings[self.config.name] = duration_ms
        logger.info(
            "Query processing succeeded",
            room=self.config.name,
            query=context.query_index,
            duration_ms=duration_ms,
        )
        return context

    def on_failure(self, context: QueryContext, error: PlaneLocError) -> QueryContext:
        """
        Handle a stage error that leaves no usable output.

        Args:
            context: query state
            error: the typed error raised by the stage

        Returns:
            Updated context, flagged with the failing room
        """
        context.failed_room = self.config.name
        context.error = error.code
        logger.error(
            "Query processing failed",
            room=self.config.name,
            query=context.query_index,
            message=error.message,
            detail=error.detail,
        )
        return context

    def execute(self, context: QueryContext) -> QueryContext:
        """
        Full execution flow for one query.

        This is the entry point called by the pipeline task.

        Args:
            context: query state from the previous room

        Returns:
            Query state after this room
        """
        if not self.validate_entry(context):
            return context

        self.on_entry(context)
        started = time.perf_counter()
        try:
            context = self.process(context)
        except PlaneLocError as e:
            return self.on_failure(context, e)

        return self.on_success(context, int((time.perf_counter() - started) * 1000))
