"""
Organized point clouds from depth maps.

Each valid pixel is unprojected and gets a unit normal from the cross product of
its x- and y-tangents. Per axis the one-sided tangent whose inverse-depth second
difference is smaller is used: inverse depth is affine in pixel coordinates on a
plane, so the flatter side lies on the pixel's own surface and normals next to
creases do not blend two walls.
"""
from dataclasses import dataclass

import numpy as np

from services.camera import DepthMap
from services.geometry import Intrinsics

# Score given to a side whose second difference cannot be evaluated
_UNSCORED = 1e30


@dataclass(eq=False)
class OrganizedCloud:
    """H×W grids of camera-frame points and normals with validity flags."""
    points: np.ndarray
    normals: np.ndarray
    valid: np.ndarray
    normal_valid: np.ndarray

    @property
    def shape(self) -> tuple[int, int]:
        return self.valid.shape

    @property
    def usable(self) -> np.ndarray:
        """Pixels that may join a primitive: valid depth and a defined normal."""
        return self.valid & self.normal_valid


def _shift(grid: np.ndarray, dy: int, dx: int, fill: float = np.nan) -> np.ndarray:
    """out[y, x] = grid[y + dy, x + dx], filled where the source is outside."""
    out = np.full_like(grid, fill, dtype=float)
    H, W = grid.shape[:2]
    if abs(dy) >= H or abs(dx) >= W:
        return out
    ys_out = slice(max(-dy, 0), min(H - dy, H))
    xs_out = slice(max(-dx, 0), min(W - dx, W))
    ys_in = slice(max(dy, 0), min(H + dy, H))
    xs_in = slice(max(dx, 0), min(W + dx, W))
    out[ys_out, xs_out] = grid[ys_in, xs_in]
    return out


def _axis_tangent(
    points: np.ndarray,
    inverse_depth: np.ndarray,
    radius: int,
    axis: int,
) -> tuple[np.ndarray, np.ndarray]:
    """Tangent along one image axis (0 = x, 1 = y) and its availability."""
    def step(k: int) -> tuple[int, int]:
        return (0, k) if axis == 0 else (k, 0)

    w0 = inverse_depth
    w_fwd1, w_fwd2 = _shift(w0, *step(radius)), _shift(w0, *step(2 * radius))
    w_bwd1, w_bwd2 = _shift(w0, *step(-radius)), _shift(w0, *step(-2 * radius))

    forward_ok = np.isfinite(w0) & np.isfinite(w_fwd1)
    backward_ok = np.isfinite(w0) & np.isfinite(w_bwd1)
    with np.errstate(invalid="ignore"):
        forward_score = np.where(np.isfinite(w_fwd2), np.abs(w_fwd2 - 2 * w_fwd1 + w0), _UNSCORED)
        backward_score = np.where(np.isfinite(w_bwd2), np.abs(w0 - 2 * w_bwd1 + w_bwd2), _UNSCORED)
    forward_score = np.where(forward_ok, forward_score, np.inf)
    backward_score = np.where(backward_ok, backward_score, np.inf)

    p_fwd = np.stack([_shift(points[..., k], *step(radius)) for k in range(3)], axis=-1)
    p_bwd = np.stack([_shift(points[..., k], *step(-radius)) for k in range(3)], axis=-1)
    use_forward = forward_score <= backward_score
    tangent = np.where(use_forward[..., None], p_fwd - points, points - p_bwd)
    available = forward_ok | backward_ok
    return np.where(available[..., None], tangent, np.nan), available


def unproject_depth(depth: DepthMap, K: Intrinsics, normal_radius: int = 2) -> OrganizedCloud:
    """
    Unproject every pixel of `depth` and estimate camera-facing normals.

    Invalid pixels get NaN points and are flagged; they never join a primitive.
    """
    H, W = depth.height, depth.width
    valid = depth.valid_mask
    z = np.where(valid, depth.values, np.nan)
    ys, xs = np.mgrid[0:H, 0:W].astype(float)
    points = np.stack([(xs - K.cx) / K.fx * z, (ys - K.cy) / K.fy * z, z], axis=-1)

    inverse_depth = 1.0 / z
    tangent_x, ok_x = _axis_tangent(points, inverse_depth, normal_radius, axis=0)
    tangent_y, ok_y = _axis_tangent(points, inverse_depth, normal_radius, axis=1)

    normals = np.cross(tangent_x, tangent_y)
    norms = np.linalg.norm(normals, axis=-1)
    normal_valid = valid & ok_x & ok_y & np.isfinite(norms) & (norms > 1e-15)
    with np.errstate(invalid="ignore", divide="ignore"):
        normals = normals / norms[..., None]
    # Orient toward the camera: n·x < 0
    facing = np.einsum("hwk,hwk->hw", normals, points)
    normals = np.where((facing > 0)[..., None], -normals, normals)
    normals[~normal_valid] = np.nan
    return OrganizedCloud(points=points, normals=normals, valid=valid, normal_valid=normal_valid)
