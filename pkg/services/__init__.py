from .errors import PlaneLocError
from .geometry import (
    Intrinsics,
    Plane,
    Pose,
    compose,
    invert,
    se3_exp,
    se3_log,
    so3_exp,
    so3_log,
    transform_plane,
)
from .camera import DepthMap, project, unproject
from .primitives import MapPrimitive, QueryPrimitive
from .rendering import render_depth

__all__ = [
    "PlaneLocError",
    "Intrinsics",
    "Plane",
    "Pose",
    "compose",
    "invert",
    "se3_exp",
    "se3_log",
    "so3_exp",
    "so3_log",
    "transform_plane",
    "DepthMap",
    "project",
    "unproject",
    "MapPrimitive",
    "QueryPrimitive",
    "render_depth",
]
