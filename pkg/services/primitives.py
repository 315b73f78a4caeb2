"""
Planar primitives: query-side (plane + pixel mask) and map-side (plane + polygon).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from services.geometry import Plane, fit_plane, plane_basis

DEFAULT_SAMPLE_COUNT = 1024


@dataclass(eq=False)
class QueryPrimitive:
    """A plane in the camera frame with the pixel mask it explains."""
    plane: Plane
    mask: np.ndarray
    index: int

    def __post_init__(self):
        self.mask = np.asarray(self.mask, dtype=bool)
        if not self.mask.any():
            raise ValueError(f"Query primitive {self.index} has an empty mask")

    @property
    def area(self) -> int:
        """Pixel count ω."""
        return int(self.mask.sum())

    @property
    def pixels(self) -> np.ndarray:
        """(N, 2) pixel coordinates (x, y) covered by the mask."""
        ys, xs = np.nonzero(self.mask)
        return np.column_stack([xs, ys]).astype(float)

    def to_dict(self) -> dict:
        return {
            "index": self.index,
            "normal": [float(v) for v in self.plane.normal],
            "offset": float(self.plane.offset),
            "area": self.area,
        }


@dataclass(eq=False)
class MapPrimitive:
    """A bounded planar patch of the map: plane, convex polygon and point samples."""
    plane: Plane
    boundary: np.ndarray
    area: float
    index: int
    sample_points: np.ndarray = field(default_factory=lambda: np.zeros((0, 3)))

    def __post_init__(self):
        self.boundary = np.asarray(self.boundary, dtype=float).reshape(-1, 3)
        self.sample_points = np.asarray(self.sample_points, dtype=float).reshape(-1, 3)

    @classmethod
    def from_boundary(
        cls,
        boundary: np.ndarray,
        index: int,
        plane: Optional[Plane] = None,
        sample_count: int = 0,
        seed: Optional[int] = None,
    ) -> "MapPrimitive":
        """Build a primitive from polygon vertices (projected onto `plane` if given)."""
        boundary = np.asarray(boundary, dtype=float).reshape(-1, 3)
        plane = plane or fit_plane(boundary)
        boundary = boundary - np.outer(plane.residual(boundary), plane.normal)
        area = polygon_area(to_plane_coords(plane, boundary))
        primitive = cls(plane=plane, boundary=boundary, area=area, index=index)
        if sample_count:
            primitive.sample_points = sample_primitive_points(
                primitive, sample_count, seed=index if seed is None else seed
            )
        return primitive

    @property
    def centroid(self) -> np.ndarray:
        """Area centroid of the boundary polygon."""
        origin, e1, e2 = plane_basis(self.plane)
        cx, cy = polygon_centroid(to_plane_coords(self.plane, self.boundary))
        return origin + cx * e1 + cy * e2

    def to_dict(self) -> dict:
        return {
            "index": self.index,
            "normal": [float(v) for v in self.plane.normal],
            "offset": float(self.plane.offset),
            "boundary": [[float(c) for c in vertex] for vertex in self.boundary],
            "area": float(self.area),
        }


def rectangle(
    center: np.ndarray,
    axis_u: np.ndarray,
    axis_v: np.ndarray,
    half_u: float,
    half_v: float,
    index: int,
    sample_count: int = 0,
) -> MapPrimitive:
    """Rectangular primitive with normal axis_u × axis_v."""
    center = np.asarray(center, dtype=float)
    axis_u = np.asarray(axis_u, dtype=float) / np.linalg.norm(axis_u)
    axis_v = np.asarray(axis_v, dtype=float) / np.linalg.norm(axis_v)
    normal = np.cross(axis_u, axis_v)
    plane = Plane(normal, -float(normal @ center))
    corners = np.array([
        center - half_u * axis_u - half_v * axis_v,
        center + half_u * axis_u - half_v * axis_v,
        center + half_u * axis_u + half_v * axis_v,
        center - half_u * axis_u + half_v * axis_v,
    ])
    return MapPrimitive.from_boundary(corners, index=index, plane=plane, sample_count=sample_count)


# =============================================================================
# Polygon helpers
# =============================================================================

def to_plane_coords(plane: Plane, points: np.ndarray) -> np.ndarray:
    """Express 3-D points in the plane's 2-D frame."""
    origin, e1, e2 = plane_basis(plane)
    rel = np.asarray(points, dtype=float).reshape(-1, 3) - origin
    return np.column_stack([rel @ e1, rel @ e2])


def from_plane_coords(plane: Plane, coords: np.ndarray) -> np.ndarray:
    """Lift 2-D plane-frame coordinates back to 3-D."""
    origin, e1, e2 = plane_basis(plane)
    coords = np.asarray(coords, dtype=float).reshape(-1, 2)
    return origin + coords[:, :1] * e1 + coords[:, 1:] * e2


def polygon_area(coords: np.ndarray) -> float:
    """Shoelace area of a simple 2-D polygon."""
    x, y = coords[:, 0], coords[:, 1]
    return float(abs(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1))) / 2.0)


def polygon_centroid(coords: np.ndarray) -> np.ndarray:
    x, y = coords[:, 0], coords[:, 1]
    xn, yn = np.roll(x, -1), np.roll(y, -1)
    cross = x * yn - xn * y
    signed_area = cross.sum() / 2.0
    if abs(signed_area) < 1e-15:
        return coords.mean(axis=0)
    return np.array([((x + xn) * cross).sum(), ((y + yn) * cross).sum()]) / (6.0 * signed_area)


def points_in_convex_polygon(coords: np.ndarray, polygon: np.ndarray, tol: float = 0.0) -> np.ndarray:
    """Inside test for (N, 2) points against a convex polygon of either winding."""
    coords = np.asarray(coords, dtype=float).reshape(-1, 2)
    edges = np.roll(polygon, -1, axis=0) - polygon
    rel = coords[:, None, :] - polygon[None, :, :]
    cross = edges[None, :, 0] * rel[:, :, 1] - edges[None, :, 1] * rel[:, :, 0]
    return np.all(cross >= -tol, axis=1) | np.all(cross <= tol, axis=1)


def fan_triangles(boundary: np.ndarray) -> list[np.ndarray]:
    """Fan triangulation of a convex polygon from its first vertex."""
    return [
        np.array([boundary[0], boundary[k], boundary[k + 1]])
        for k in range(1, len(boundary) - 1)
    ]


def sample_primitive_points(
    primitive: MapPrimitive,
    count: int,
    seed: int = 0,
) -> np.ndarray:
    """`count` points uniform over the primitive's polygon, deterministic in `seed`."""
    rng = np.random.default_rng(seed)
    triangles = fan_triangles(primitive.boundary)
    if not triangles:
        return np.repeat(primitive.boundary[:1], count, axis=0)
    areas = np.array([
        np.linalg.norm(np.cross(tri[1] - tri[0], tri[2] - tri[0])) / 2.0 for tri in triangles
    ])
    probabilities = areas / areas.sum() if areas.sum() > 0 else None
    picks = rng.choice(len(triangles), size=count, p=probabilities)
    r1 = np.sqrt(rng.random(count))
    r2 = rng.random(count)
    stacked = np.stack(triangles)[picks]
    a, b, c = stacked[:, 0], stacked[:, 1], stacked[:, 2]
    return (1 - r1)[:, None] * a + (r1 * (1 - r2))[:, None] * b + (r1 * r2)[:, None] * c
