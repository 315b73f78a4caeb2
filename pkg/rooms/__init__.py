"""
PlaneLoc Rooms - the relocalization pipeline as a chain of stages

Each room is one stage a query passes through:
- Room 1 (Extraction): planar primitives from the query depth map
- Room 2 (Matching): query-to-map plane correspondences
- Room 3 (Pose): robust rotation, translation and scale from correspondences
- Room 4 (Refinement): depth alignment against the rendered map (optional)
"""
from rooms.base import (
    BaseRoom,
    QueryContext,
    RoomConfig,
    EXTRACTION_ROOM_CONFIG,
    MATCHING_ROOM_CONFIG,
    POSE_ROOM_CONFIG,
    REFINEMENT_ROOM_CONFIG,
)
from rooms.extraction import ExtractionRoom
from rooms.matching import MatchingRoom
from rooms.pose import PoseRoom
from rooms.refinement import RefinementRoom

__all__ = [
    "BaseRoom",
    "QueryContext",
    "RoomConfig",
    "EXTRACTION_ROOM_CONFIG",
    "MATCHING_ROOM_CONFIG",
    "POSE_ROOM_CONFIG",
    "REFINEMENT_ROOM_CONFIG",
    "ExtractionRoom",
    "MatchingRoom",
    "PoseRoom",
    "RefinementRoom",
]
