"""
Independent reference computations used by the tests.

Each oracle reaches the answer by a different route than the code under test:
brute-force ray casting instead of rasterization, point transport instead of
the dual plane transform, grid search instead of closed-form least squares.
"""
from typing import Sequence

import numpy as np
from scipy.spatial.transform import Rotation

from services.geometry import Intrinsics, Plane, Pose
from services.primitives import MapPrimitive


def random_unit_vectors(rng: np.random.Generator, count: int) -> np.ndarray:
    vectors = rng.standard_normal((count, 3))
    return vectors / np.linalg.norm(vectors, axis=1, keepdims=True)


def random_rotation(rng: np.random.Generator, max_angle: float = 2.5) -> np.ndarray:
    axis = random_unit_vectors(rng, 1)[0]
    return Rotation.from_rotvec(rng.uniform(0.1, max_angle) * axis).as_matrix()


def points_on_plane(plane: Plane, rng: np.random.Generator, count: int, spread: float = 2.0) -> np.ndarray:
    """Random points satisfying n·x + d = 0."""
    helper = np.array([1.0, 0.0, 0.0]) if abs(plane.normal[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
    e1 = np.cross(plane.normal, helper)
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(plane.normal, e1)
    coords = rng.uniform(-spread, spread, size=(count, 2))
    return -plane.offset * plane.normal + coords[:, :1] * e1 + coords[:, 1:] * e2


def refit_plane_svd(points: np.ndarray) -> tuple[np.ndarray, float]:
    """Plane through points by SVD of the centered scatter, returned as (n, d)."""
    centroid = points.mean(axis=0)
    _, _, vt = np.linalg.svd(points - centroid)
    normal = vt[-1]
    return normal, -float(normal @ centroid)


def same_plane(normal: np.ndarray, offset: float, plane: Plane, atol: float) -> bool:
    """Equality of (n, d) and a Plane up to a global sign."""
    for sign in (1.0, -1.0):
        if np.allclose(sign * normal, plane.normal, atol=atol) and abs(sign * offset - plane.offset) < atol:
            return True
    return False


def ray_cast_pixels(primitives: Sequence[MapPrimitive], pose: Pose, K: Intrinsics, pixels: np.ndarray) -> np.ndarray:
    """
    Nearest hit of every primitive polygon along each pixel's ray, one ray at a time.

    Returns depths (N,) with 0 where nothing is hit.
    """
    depths = np.zeros(len(pixels))
    R, t = pose.rotation, pose.translation
    for k, (x, y) in enumerate(np.asarray(pixels, dtype=float).reshape(-1, 2)):
        ray_c = np.array([(x - K.cx) / K.fx, (y - K.cy) / K.fy, 1.0])
        ray_m = R @ ray_c
        best = np.inf
        for p in primitives:
            n, d = p.plane.normal, p.plane.offset
            denom = float(n @ ray_m)
            if abs(denom) < 1e-12:
                continue
            s = -(float(n @ t) + d) / denom
            if s <= 0:
                continue
            hit = t + s * ray_m
            if _inside_polygon(hit, p) and s < best:
                best = s
        if np.isfinite(best):
            depths[k] = best
    return depths


def ray_cast_depth(primitives: Sequence[MapPrimitive], pose: Pose, K: Intrinsics) -> np.ndarray:
    """Depth image of ray_cast_pixels over every pixel."""
    ys, xs = np.mgrid[0:K.height, 0:K.width]
    pixels = np.column_stack([xs.ravel(), ys.ravel()])
    return ray_cast_pixels(primitives, pose, K, pixels).reshape(K.height, K.width)


def _inside_polygon(point: np.ndarray, primitive: MapPrimitive) -> bool:
    boundary = primitive.boundary
    n = primitive.plane.normal
    signs = []
    for a, b in zip(boundary, np.roll(boundary, -1, axis=0)):
        signs.append(float(np.cross(b - a, point - a) @ n))
    signs = np.array(signs)
    return bool(np.all(signs >= -1e-9) or np.all(signs <= 1e-9))


def wls_grid_descent(
    normals: np.ndarray,
    d_query: np.ndarray,
    d_map: np.ndarray,
    weights: np.ndarray,
    center: np.ndarray,
    half_width: float = 0.5,
    steps: int = 11,
    sweeps: int = 200,
) -> np.ndarray:
    """
    Minimize Σ ω (s·d^q − t·n^m − d^m)² over x = [t; s] by a coarse grid around
    `center` followed by shrinking coordinate descent.
    """
    def cost(x):
        r = x[3] * d_query - normals @ x[:3] - d_map
        return float(np.sum(weights * r * r))

    best = np.asarray(center, dtype=float).copy()
    offsets = np.linspace(-half_width, half_width, steps)
    for axis in range(4):
        trials = [best + o * np.eye(4)[axis] for o in offsets]
        best = min(trials, key=cost)

    step = half_width / steps
    for _ in range(sweeps):
        improved = False
        for axis in range(4):
            # exact line minimum along one coordinate (the cost is quadratic)
            e = np.eye(4)[axis]
            f0, fp, fm = cost(best), cost(best + step * e), cost(best - step * e)
            curvature = fp + fm - 2 * f0
            if curvature > 0:
                move = -step * (fp - fm) / (2 * curvature)
                candidate = best + move * e
                if cost(candidate) < f0:
                    best = candidate
                    improved = True
        if not improved:
            step /= 2
            if step < 1e-14:
                break
    return best


def numeric_gradient(func, x: np.ndarray, h: float = 1e-6) -> np.ndarray:
    """Central differences of a scalar function."""
    x = np.asarray(x, dtype=float)
    grad = np.zeros_like(x)
    for k in range(x.size):
        e = np.zeros_like(x)
        e[k] = h
        grad[k] = (func(x + e) - func(x - e)) / (2 * h)
    return grad
