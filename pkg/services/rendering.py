"""
Z-buffer depth rendering of planar maps.

Each primitive polygon is moved into the camera frame, clipped against the near
plane, fan-triangulated and rasterized at pixel centers with edge functions.
Covered pixels take the analytic depth of the primitive's camera-frame plane, so
the rendering is exact for planar geometry.
"""
from __future__ import annotations

from typing import Sequence

import numpy as np
import structlog

from services.camera import INVALID_DEPTH, DepthMap, plane_depths
from services.geometry import Intrinsics, Pose, invert, transform_plane
from services.primitives import MapPrimitive

logger = structlog.get_logger()

NEAR_PLANE = 1e-6

# Projected triangles with less area than this (px²) are skipped
MIN_TRIANGLE_AREA = 1e-12

NO_PRIMITIVE = -1


def clip_near(polygon: np.ndarray, near: float = NEAR_PLANE) -> np.ndarray:
    """Sutherland-Hodgman clip of a camera-frame polygon against z ≥ near."""
    if len(polygon) == 0:
        return polygon
    kept = []
    for k in range(len(polygon)):
        current, following = polygon[k], polygon[(k + 1) % len(polygon)]
        current_in, following_in = current[2] >= near, following[2] >= near
        if current_in:
            kept.append(current)
        if current_in != following_in:
            t = (near - current[2]) / (following[2] - current[2])
            point = current + t * (following - current)
            point[2] = near
            kept.append(point)
    return np.array(kept).reshape(-1, 3)


def _rasterize_triangle(triangle: np.ndarray, width: int, height: int) -> np.ndarray:
    """(N, 2) integer pixel centers (x, y) covered by a projected triangle."""
    a, b, c = triangle
    signed_area = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
    if abs(signed_area) < MIN_TRIANGLE_AREA:
        return np.zeros((0, 2), dtype=int)

    x_lo = max(int(np.ceil(triangle[:, 0].min())), 0)
    x_hi = min(int(np.floor(triangle[:, 0].max())), width - 1)
    y_lo = max(int(np.ceil(triangle[:, 1].min())), 0)
    y_hi = min(int(np.floor(triangle[:, 1].max())), height - 1)
    if x_lo > x_hi or y_lo > y_hi:
        return np.zeros((0, 2), dtype=int)

    ys, xs = np.mgrid[y_lo:y_hi + 1, x_lo:x_hi + 1]
    px, py = xs.ravel().astype(float), ys.ravel().astype(float)
    sign = 1.0 if signed_area > 0 else -1.0
    inside = np.ones(px.shape, dtype=bool)
    for start, end in ((a, b), (b, c), (c, a)):
        edge = (end[0] - start[0]) * (py - start[1]) - (end[1] - start[1]) * (px - start[0])
        inside &= sign * edge >= 0
    return np.column_stack([xs.ravel()[inside], ys.ravel()[inside]])


def rasterize_primitive(
    primitive: MapPrimitive,
    cam_from_map: Pose,
    K: Intrinsics,
) -> tuple[np.ndarray, np.ndarray]:
    """
    Pixels covered by one primitive and their analytic depths.

    Returns:
        ((N, 2) integer pixel coordinates (x, y), (N,) depths). Pixels whose ray is
        parallel to the plane are dropped.
    """
    camera_polygon = clip_near(cam_from_map.apply(primitive.boundary))
    if len(camera_polygon) < 3:
        return np.zeros((0, 2), dtype=int), np.zeros(0)

    projected = np.column_stack([
        K.fx * camera_polygon[:, 0] / camera_polygon[:, 2] + K.cx,
        K.fy * camera_polygon[:, 1] / camera_polygon[:, 2] + K.cy,
    ])
    covered = [
        _rasterize_triangle(projected[[0, k, k + 1]], K.width, K.height)
        for k in range(1, len(projected) - 1)
    ]
    pixels = np.unique(np.concatenate(covered), axis=0) if covered else np.zeros((0, 2), dtype=int)
    if len(pixels) == 0:
        return pixels, np.zeros(0)

    camera_plane = transform_plane(cam_from_map, primitive.plane)
    depths = plane_depths(K, camera_plane, pixels)
    keep = np.isfinite(depths)
    return pixels[keep], depths[keep]


def render_with_ids(
    primitives: Sequence[MapPrimitive],
    pose: Pose,
    K: Intrinsics,
) -> tuple[DepthMap, np.ndarray]:
    """
    Render a depth map and the per-pixel position of the front-most primitive.

    The id buffer holds positions into `primitives` (NO_PRIMITIVE where uncovered).
    """
    cam_from_map = invert(pose)
    zbuffer = np.full((K.height, K.width), np.inf)
    ids = np.full((K.height, K.width), NO_PRIMITIVE, dtype=int)

    for position, primitive in enumerate(primitives):
        pixels, depths = rasterize_primitive(primitive, cam_from_map, K)
        if len(pixels) == 0:
            continue
        xs, ys = pixels[:, 0], pixels[:, 1]
        closer = depths < zbuffer[ys, xs]
        zbuffer[ys[closer], xs[closer]] = depths[closer]
        ids[ys[closer], xs[closer]] = position

    zbuffer[~np.isfinite(zbuffer)] = INVALID_DEPTH
    return DepthMap(zbuffer), ids


def render_depth(primitives: Sequence[MapPrimitive], pose: Pose, K: Intrinsics) -> DepthMap:
    """Depth of the planar map seen from `pose`; uncovered pixels carry the sentinel."""
    depth, _ = render_with_ids(primitives, pose, K)
    return depth
