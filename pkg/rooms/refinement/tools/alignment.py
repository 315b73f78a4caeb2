"""
Per-primitive depth alignment against a planar rendering.

A query primitive's plane-induced depth, scaled by its offset seed δ, is lifted
to 3-D, moved by the relative transform T_tr into the frame the map was rendered
from, and projected. The residual at a pixel is D(û) − ẑ with D sampled
bilinearly. Gradients follow the chain rule through the bilinear interpolant,
the pinhole projection, a left perturbation of T_tr and the δ scaling:

    ∂x'/∂ω = −[x']×,  ∂x'/∂v = I,  ∂x'/∂δ = R p
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from services.camera import DepthMap, bilinear_sample, pixel_rays, plane_depths
from services.geometry import Intrinsics, Pose
from services.primitives import QueryPrimitive


@dataclass(eq=False)
class SeededDepth:
    """Plane-induced depth over (a subset of) a primitive's mask."""
    pixels: np.ndarray
    depths: np.ndarray
    rays: np.ndarray
    dropped: int = 0

    @property
    def points(self) -> np.ndarray:
        """Camera-frame points at these depths."""
        return self.rays * self.depths[:, None]


@dataclass(eq=False)
class WarpResult:
    source_pixels: np.ndarray
    warped_pixels: np.ndarray
    depths: np.ndarray
    valid: np.ndarray


@dataclass
class PrimitiveTerms:
    """Residual r of one primitive, its valid-pixel count and gradients."""
    residual: float
    valid_count: int
    grad_xi: np.ndarray
    grad_delta: float


def offset_seeded_depth(
    primitive: QueryPrimitive,
    delta: float,
    K: Intrinsics,
    pixels: Optional[np.ndarray] = None,
) -> SeededDepth:
    """
    δ times the analytic plane depth over the mask (or the given mask pixels).

    Pixels whose ray misses the plane in front of the camera are dropped and counted.
    """
    pixels = primitive.pixels if pixels is None else np.asarray(pixels, dtype=float).reshape(-1, 2)
    depths = plane_depths(K, primitive.plane, pixels)
    keep = np.isfinite(depths)
    return SeededDepth(
        pixels=pixels[keep],
        depths=delta * depths[keep],
        rays=pixel_rays(K, pixels[keep]),
        dropped=int((~keep).sum()),
    )


def _project(points: np.ndarray, K: Intrinsics) -> tuple[np.ndarray, np.ndarray]:
    z = points[:, 2]
    front = z > 0
    safe_z = np.where(front, z, 1.0)
    coords = np.column_stack([K.fx * points[:, 0] / safe_z + K.cx, K.fy * points[:, 1] / safe_z + K.cy])
    coords[~front] = np.nan
    return coords, front


def warp_primitive(
    primitive: QueryPrimitive,
    delta: float,
    T_tr: Pose,
    K: Intrinsics,
    D: DepthMap,
    pixels: Optional[np.ndarray] = None,
) -> WarpResult:
    """
    Warp δ-scaled primitive depth into the rendering's view.

    A pixel is valid when the warped point is in front of the camera and lands
    inside the image on a fully valid bilinear neighbourhood of D.
    """
    seeded = offset_seeded_depth(primitive, delta, K, pixels)
    moved = T_tr.apply(seeded.points)
    coords, front = _project(moved, K)
    _, valid, _ = bilinear_sample(D, coords)
    return WarpResult(
        source_pixels=seeded.pixels,
        warped_pixels=coords,
        depths=moved[:, 2],
        valid=valid & front,
    )


def primitive_terms(
    base_points: np.ndarray,
    delta: float,
    T_tr: Pose,
    K: Intrinsics,
    D: DepthMap,
    with_gradient: bool = False,
) -> PrimitiveTerms:
    """
    Mean squared residual of points given at δ = 1, and optionally its gradients.

    grad_xi is w.r.t. a left perturbation exp(ξ)·T_tr at ξ = 0, ordered (ω, v).
    """
    x = delta * base_points
    moved = T_tr.apply(x)
    coords, front = _project(moved, K)
    values, valid, image_grad = bilinear_sample(D, coords, with_gradient=with_gradient)
    valid &= front
    count = int(valid.sum())
    if count == 0:
        return PrimitiveTerms(0.0, 0, np.zeros(6), 0.0)

    xp = moved[valid]
    e = values[valid] - xp[:, 2]
    residual = float(np.mean(e * e))
    if not with_gradient:
        return PrimitiveTerms(residual, count, np.zeros(6), 0.0)

    g = image_grad[valid]
    inv_z = 1.0 / xp[:, 2]
    # ∂e/∂x' = ∇D · ∂û/∂x' − ∂ẑ/∂x'
    a = np.column_stack([
        g[:, 0] * K.fx * inv_z,
        g[:, 1] * K.fy * inv_z,
        -(g[:, 0] * K.fx * xp[:, 0] + g[:, 1] * K.fy * xp[:, 1]) * inv_z**2 - 1.0,
    ])
    scale = 2.0 / count
    grad_omega = scale * (e[:, None] * np.cross(xp, a)).sum(axis=0)
    grad_v = scale * (e[:, None] * a).sum(axis=0)
    rotated = base_points[valid] @ T_tr.rotation.T
    grad_delta = scale * float(np.sum(e * np.einsum("ij,ij->i", a, rotated)))
    return PrimitiveTerms(residual, count, np.concatenate([grad_omega, grad_v]), grad_delta)


def per_primitive_residual(
    primitive: QueryPrimitive,
    delta: float,
    T_tr: Pose,
    K: Intrinsics,
    D: DepthMap,
    pixels: Optional[np.ndarray] = None,
) -> tuple[float, int]:
    """(mean of (D(û) − ẑ)² over valid pixels, valid count); r = 0 when none are valid."""
    seeded = offset_seeded_depth(primitive, 1.0, K, pixels)
    terms = primitive_terms(seeded.points, delta, T_tr, K, D)
    return terms.residual, terms.valid_count


def _sample_for(samples: Optional[Sequence[Optional[np.ndarray]]], k: int) -> Optional[np.ndarray]:
    return None if samples is None else samples[k]


def depth_cost(
    primitives: Sequence[QueryPrimitive],
    deltas: Sequence[float],
    T_tr: Pose,
    K: Intrinsics,
    D: DepthMap,
    samples: Optional[Sequence[Optional[np.ndarray]]] = None,
) -> float:
    """(1/Nq) Σ r_i, each r_i over the primitive's sampled pixels (full mask when None)."""
    if len(deltas) != len(primitives):
        raise ValueError(f"Expected {len(primitives)} offset seeds, got {len(deltas)}")
    if not primitives:
        return 0.0
    total = sum(
        per_primitive_residual(p, float(deltas[k]), T_tr, K, D, _sample_for(samples, k))[0]
        for k, p in enumerate(primitives)
    )
    return total / len(primitives)


def cost_gradient(
    primitives: Sequence[QueryPrimitive],
    deltas: Sequence[float],
    T_tr: Pose,
    K: Intrinsics,
    D: DepthMap,
    samples: Optional[Sequence[Optional[np.ndarray]]] = None,
) -> tuple[np.ndarray, np.ndarray]:
    """(∂E/∂ξ, ∂E/∂δ) of depth_cost at the given state."""
    grad_xi = np.zeros(6)
    grad_delta = np.zeros(len(primitives))
    for k, primitive in enumerate(primitives):
        seeded = offset_seeded_depth(primitive, 1.0, K, _sample_for(samples, k))
        terms = primitive_terms(seeded.points, float(deltas[k]), T_tr, K, D, with_gradient=True)
        grad_xi += terms.grad_xi
        grad_delta[k] = terms.grad_delta
    n = max(len(primitives), 1)
    return grad_xi / n, grad_delta / n
