"""
Pinhole camera model, depth maps and per-pixel plane depth.

Pixels are addressed as u = (x, y); grids are indexed [y, x].
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from services.errors import BehindCamera, NegativeDepth, RayParallel
from services.geometry import Intrinsics, Plane

INVALID_DEPTH = 0.0

# Rays closer than this to the plane direction are treated as parallel
RAY_PARALLEL_EPS = 1e-9


@dataclass(frozen=True, eq=False)
class DepthMap:
    """H×W grid of positive depths (meters); `invalid` marks missing pixels."""
    values: np.ndarray
    invalid: float = INVALID_DEPTH

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.ndim != 2:
            raise ValueError(f"Depth map must be 2-D, got shape {values.shape}")
        object.__setattr__(self, "values", values)

    @property
    def height(self) -> int:
        return self.values.shape[0]

    @property
    def width(self) -> int:
        return self.values.shape[1]

    @property
    def valid_mask(self) -> np.ndarray:
        v = self.values
        return np.isfinite(v) & (v > 0) & (v != self.invalid)

    @classmethod
    def empty(cls, width: int, height: int) -> "DepthMap":
        return cls(np.full((height, width), INVALID_DEPTH))

    def downsampled(self, factor: int) -> "DepthMap":
        if factor == 1:
            return self
        return DepthMap(self.values[::factor, ::factor].copy(), self.invalid)

    def with_sentinel(self, invalid: float) -> "DepthMap":
        """Same depths with invalid pixels rewritten to another sentinel."""
        values = self.values.copy()
        values[~self.valid_mask] = invalid
        return DepthMap(values, invalid)


def project(K: Intrinsics, x: np.ndarray) -> tuple[np.ndarray, float]:
    """Camera point → (pixel, depth). Raises BehindCamera when z ≤ 0."""
    x = np.asarray(x, dtype=float).reshape(3)
    if x[2] <= 0:
        raise BehindCamera("Point is behind the camera", z=float(x[2]))
    pixel = np.array([K.fx * x[0] / x[2] + K.cx, K.fy * x[1] / x[2] + K.cy])
    return pixel, float(x[2])


def unproject(K: Intrinsics, u: np.ndarray, depth: float) -> np.ndarray:
    """Pixel + depth → camera point."""
    if depth <= 0:
        raise NegativeDepth("Unprojection needs a positive depth", depth=float(depth))
    u = np.asarray(u, dtype=float).reshape(2)
    return np.array([(u[0] - K.cx) / K.fx * depth, (u[1] - K.cy) / K.fy * depth, depth])


def pixel_rays(K: Intrinsics, pixels: np.ndarray) -> np.ndarray:
    """K⁻¹ũ for an (N, 2) array of pixels; the z component is 1."""
    pixels = np.asarray(pixels, dtype=float).reshape(-1, 2)
    return np.column_stack([
        (pixels[:, 0] - K.cx) / K.fx,
        (pixels[:, 1] - K.cy) / K.fy,
        np.ones(len(pixels)),
    ])


def pixel_grid(width: int, height: int) -> np.ndarray:
    """All pixel coordinates (x, y) in row-major order, shape (H·W, 2)."""
    ys, xs = np.mgrid[0:height, 0:width]
    return np.column_stack([xs.ravel(), ys.ravel()]).astype(float)


def plane_depth_at_pixel(K: Intrinsics, plane: Plane, u: np.ndarray) -> float:
    """Depth z at which the ray through `u` meets the camera-frame plane."""
    ray = pixel_rays(K, u)[0]
    denom = float(plane.normal @ ray)
    if abs(denom) <= RAY_PARALLEL_EPS:
        raise RayParallel("Pixel ray is parallel to the plane", pixel=list(map(float, u)))
    z = -plane.offset / denom
    if z <= 0:
        raise NegativeDepth("Plane lies behind the camera along this ray", depth=z)
    return z


def plane_depths(K: Intrinsics, plane: Plane, pixels: np.ndarray) -> np.ndarray:
    """
    Vectorized plane depth for (N, 2) pixels.

    Pixels whose ray is parallel to the plane or meets it behind the camera get NaN.
    """
    rays = pixel_rays(K, pixels)
    denom = rays @ plane.normal
    with np.errstate(divide="ignore", invalid="ignore"):
        z = -plane.offset / denom
    z[(np.abs(denom) <= RAY_PARALLEL_EPS) | ~(z > 0)] = np.nan
    return z


def bilinear_sample(
    depth: DepthMap,
    coords: np.ndarray,
    with_gradient: bool = False,
) -> tuple[np.ndarray, np.ndarray, Optional[np.ndarray]]:
    """
    Bilinear lookup of `depth` at continuous (N, 2) pixel coordinates.

    Returns (values, valid, gradient). A sample is valid only when it lies inside
    the image and all four neighbors are valid depths. `gradient` is the exact
    (N, 2) derivative of the bilinear interpolant w.r.t. (x, y).
    """
    coords = np.asarray(coords, dtype=float).reshape(-1, 2)
    x, y = coords[:, 0], coords[:, 1]
    H, W = depth.height, depth.width
    finite = np.isfinite(x) & np.isfinite(y)
    inside = finite & (x >= 0) & (y >= 0) & (x <= W - 1) & (y <= H - 1)

    x0 = np.clip(np.floor(np.where(inside, x, 0)), 0, max(W - 2, 0)).astype(int)
    y0 = np.clip(np.floor(np.where(inside, y, 0)), 0, max(H - 2, 0)).astype(int)
    x1 = np.minimum(x0 + 1, W - 1)
    y1 = np.minimum(y0 + 1, H - 1)
    fx = np.where(inside, x, 0) - x0
    fy = np.where(inside, y, 0) - y0

    grid = depth.values
    ok = depth.valid_mask
    d00, d01 = grid[y0, x0], grid[y0, x1]
    d10, d11 = grid[y1, x0], grid[y1, x1]
    valid = inside & ok[y0, x0] & ok[y0, x1] & ok[y1, x0] & ok[y1, x1]

    values = (1 - fy) * ((1 - fx) * d00 + fx * d01) + fy * ((1 - fx) * d10 + fx * d11)
    values = np.where(valid, values, np.nan)

    gradient = None
    if with_gradient:
        gx = (1 - fy) * (d01 - d00) + fy * (d11 - d10)
        gy = (1 - fx) * (d10 - d00) + fx * (d11 - d01)
        gradient = np.where(valid[:, None], np.column_stack([gx, gy]), 0.0)
    return values, valid, gradient
