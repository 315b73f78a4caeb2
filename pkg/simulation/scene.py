"""
Procedural planar rooms and query views.

A scene is an axis-aligned room shell (floor, ceiling, four walls, normals facing
inward) plus rectangular panels standing in a band in front of the side walls,
turned toward the room with a bounded tilt. Cameras are drawn in the central part
of the room and kept only when they see enough front-facing primitives whose
normals span 3-D, so every emitted query is solvable.

Usage:
    map_primitives, queries = synth_scene(SceneSpec(rng_seed=3))
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import structlog
from scipy import linalg
from scipy.spatial.transform import Rotation

from config.experiment import SceneSpec
from rooms.matching.tools.labels import MatchLabels, generate_labels
from services.camera import DepthMap
from services.errors import SamplingExhausted
from services.geometry import Intrinsics, Pose, invert, look_at, transform_plane
from services.primitives import DEFAULT_SAMPLE_COUNT, MapPrimitive, QueryPrimitive, rectangle
from services.rendering import NO_PRIMITIVE, render_with_ids

logger = structlog.get_logger()

# Panels stand this far (meters) in front of their wall
PANEL_STANDOFF = (0.25, 0.6)

# Smallest singular value of the visible normals for them to count as spanning 3-D
MIN_NORMAL_SPAN = 0.2

# Camera pitch range (degrees, negative looks down)
PITCH_RANGE = (-30.0, 10.0)


@dataclass(eq=False)
class QueryRecord:
    """One synthetic query: what the camera saw and the ground truth behind it."""
    index: int
    intrinsics: Intrinsics
    gt_pose: Pose
    depth: DepthMap
    scale: float
    query_primitives: list[QueryPrimitive]
    labels: Optional[MatchLabels]
    embeddings: Optional[tuple[np.ndarray, np.ndarray]] = None
    visible: list[int] = field(default_factory=list)


def scene_intrinsics(spec: SceneSpec) -> Intrinsics:
    width, height = spec.image_size
    return Intrinsics(
        fx=spec.focal_length,
        fy=spec.focal_length,
        cx=width / 2.0,
        cy=height / 2.0,
        width=width,
        height=height,
    )


def room_shell(extents: tuple[float, float, float]) -> list[MapPrimitive]:
    """Floor, ceiling and four walls of an [0, X]×[0, Y]×[0, Z] room, normals inward."""
    X, Y, Z = extents
    ex, ey, ez = np.eye(3)
    faces = [
        ((X / 2, Y / 2, 0.0), ex, ey, X / 2, Y / 2),    # floor, +z
        ((X / 2, Y / 2, Z), ey, ex, Y / 2, X / 2),      # ceiling, -z
        ((0.0, Y / 2, Z / 2), ey, ez, Y / 2, Z / 2),    # x = 0, +x
        ((X, Y / 2, Z / 2), ez, ey, Z / 2, Y / 2),      # x = X, -x
        ((X / 2, 0.0, Z / 2), ez, ex, Z / 2, X / 2),    # y = 0, +y
        ((X / 2, Y, Z / 2), ex, ez, X / 2, Z / 2),      # y = Y, -y
    ]
    return [
        rectangle(center, u, v, hu, hv, index=k, sample_count=DEFAULT_SAMPLE_COUNT)
        for k, (center, u, v, hu, hv) in enumerate(faces)
    ]


def _tilted(normal: np.ndarray, max_tilt_deg: float, rng: np.random.Generator) -> np.ndarray:
    if max_tilt_deg <= 0:
        return normal
    axis = np.cross(normal, rng.standard_normal(3))
    axis /= np.linalg.norm(axis)
    angle = math.radians(rng.uniform(0.0, max_tilt_deg))
    return Rotation.from_rotvec(angle * axis).apply(normal)


def interior_panels(spec: SceneSpec, rng: np.random.Generator, first_index: int) -> list[MapPrimitive]:
    """Rectangles in front of the side walls, facing into the room."""
    X, Y, Z = spec.extents
    walls = [
        (np.array([0.0, 0.0, 0.0]), np.array([0.0, 1.0, 0.0]), Y, np.array([1.0, 0.0, 0.0])),
        (np.array([X, 0.0, 0.0]), np.array([0.0, 1.0, 0.0]), Y, np.array([-1.0, 0.0, 0.0])),
        (np.array([0.0, 0.0, 0.0]), np.array([1.0, 0.0, 0.0]), X, np.array([0.0, 1.0, 0.0])),
        (np.array([0.0, Y, 0.0]), np.array([1.0, 0.0, 0.0]), X, np.array([0.0, -1.0, 0.0])),
    ]
    low, high = spec.primitive_size
    panels = []
    for k in range(spec.interior_primitives):
        origin, along, length, inward = walls[int(rng.integers(len(walls)))]
        half_u, half_v = rng.uniform(low, high, size=2) / 2.0
        position = rng.uniform(min(half_u, length / 2), max(length - half_u, length / 2))
        height = rng.uniform(min(half_v, Z / 2), max(Z - half_v, Z / 2))
        center = origin + position * along + height * np.array([0.0, 0.0, 1.0])
        center = center + rng.uniform(*PANEL_STANDOFF) * inward

        normal = _tilted(inward, spec.max_tilt_deg, rng)
        axis_u = np.cross([0.0, 0.0, 1.0], normal)
        axis_u /= np.linalg.norm(axis_u)
        axis_v = np.cross(normal, axis_u)
        panels.append(
            rectangle(
                center, axis_u, axis_v, half_u, half_v,
                index=first_index + k, sample_count=DEFAULT_SAMPLE_COUNT,
            )
        )
    return panels


def build_map(spec: SceneSpec, rng: np.random.Generator) -> list[MapPrimitive]:
    shell = room_shell(spec.extents)
    return shell + interior_panels(spec, rng, first_index=len(shell))


def _sample_camera(spec: SceneSpec, rng: np.random.Generator) -> Pose:
    X, Y, Z = spec.extents
    center = np.array([
        rng.uniform(0.3 * X, 0.7 * X),
        rng.uniform(0.3 * Y, 0.7 * Y),
        rng.uniform(min(0.8, Z / 2), max(Z - 0.8, Z / 2)),
    ])
    yaw = rng.uniform(0.0, 2.0 * math.pi)
    pitch = math.radians(rng.uniform(*PITCH_RANGE))
    forward = np.array([
        math.cos(pitch) * math.cos(yaw),
        math.cos(pitch) * math.sin(yaw),
        math.sin(pitch),
    ])
    return look_at(center, forward)


def visible_primitives(
    map_primitives: list[MapPrimitive],
    pose: Pose,
    ids: np.ndarray,
    min_pixels: int,
) -> list[int]:
    """Positions of front-facing primitives covering at least `min_pixels` pixels."""
    counts = np.bincount(ids[ids != NO_PRIMITIVE].ravel(), minlength=len(map_primitives))
    return [
        k for k, p in enumerate(map_primitives)
        if counts[k] >= min_pixels and float(p.plane.residual(pose.center)) > 0
    ]


def _solvable(map_primitives: list[MapPrimitive], visible: list[int], min_visible: int) -> bool:
    if len(visible) < max(min_visible, 3):
        return False
    normals = np.array([map_primitives[k].plane.normal for k in visible])
    return float(linalg.svdvals(normals)[-1]) > MIN_NORMAL_SPAN


def _query_from_view(
    index: int,
    spec: SceneSpec,
    map_primitives: list[MapPrimitive],
    K: Intrinsics,
    pose: Pose,
    depth: DepthMap,
    ids: np.ndarray,
    visible: list[int],
    rng: np.random.Generator,
) -> QueryRecord:
    low, high = spec.noise.scale_range
    scale = float(rng.uniform(low, high)) if high > low else float(low)

    values = depth.values.copy()
    valid = depth.valid_mask
    if spec.noise.depth_sigma > 0:
        values[valid] += rng.normal(0.0, spec.noise.depth_sigma, size=int(valid.sum()))
        values[valid] = np.maximum(values[valid], 1e-3)
    values[valid] /= scale

    cam_from_map = invert(pose)
    primitives = []
    for position in range(len(map_primitives)):
        mask = ids == position
        if not mask.any():
            continue
        plane = transform_plane(cam_from_map, map_primitives[position].plane).scaled_offset(1.0 / scale)
        primitives.append(QueryPrimitive(plane=plane, mask=mask, index=len(primitives)))

    labels = generate_labels(primitives, map_primitives, pose, K, spec.tau_star)
    return QueryRecord(
        index=index,
        intrinsics=K,
        gt_pose=pose,
        depth=DepthMap(values),
        scale=scale,
        query_primitives=primitives,
        labels=labels,
        visible=visible,
    )


def synth_scene(spec: SceneSpec) -> tuple[list[MapPrimitive], list[QueryRecord]]:
    """
    Generate a planar map and `spec.cameras` query views.

    Ground-truth query primitives are the front-most primitive regions of the
    noiseless rendering, with camera-frame planes whose offsets carry the same
    1/s mis-scale as the emitted depth.

    Raises:
        SamplingExhausted: a camera could not be placed within `spec.max_rejections` draws
    """
    rng = np.random.default_rng(spec.rng_seed)
    map_primitives = build_map(spec, rng)
    K = scene_intrinsics(spec)

    queries = []
    for index in range(spec.cameras):
        for attempt in range(spec.max_rejections):
            pose = _sample_camera(spec, rng)
            depth, ids = render_with_ids(map_primitives, pose, K)
            visible = visible_primitives(map_primitives, pose, ids, spec.min_visible_pixels)
            if _solvable(map_primitives, visible, spec.min_visible):
                break
        else:
            raise SamplingExhausted(
                "No camera placement satisfied the visibility filter",
                query=index,
                rejections=spec.max_rejections,
            )
        queries.append(_query_from_view(index, spec, map_primitives, K, pose, depth, ids, visible, rng))
        logger.debug("Query sampled", query=index, attempts=attempt + 1, visible=len(visible))

    logger.info("Scene synthesized", primitives=len(map_primitives), queries=len(queries))
    return map_primitives, queries
