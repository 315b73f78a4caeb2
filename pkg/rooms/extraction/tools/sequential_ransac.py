"""
Sequential RANSAC plane extraction.

Greedy loop: draw 3-point plane hypotheses from the remaining points, keep the one
with most inliers (distance AND normal-agreement tests), refit it by total least
squares, take the refit plane's inliers as the primitive and remove them. Stops at
`max_primitives` or when the best consensus falls below `min_inlier_fraction` of
the input size.

Usage:
    cloud = unproject_depth(depth, K)
    primitives = sequential_ransac_depth(cloud, RansacConfig())
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Iterator, Optional

import numpy as np
import structlog
from scipy.spatial import ConvexHull, QhullError

from config.experiment import RansacConfig
from services.errors import NoPlaneFound
from services.geometry import Plane, fit_plane
from services.primitives import (
    MapPrimitive,
    QueryPrimitive,
    from_plane_coords,
    sample_primitive_points,
    to_plane_coords,
)
from rooms.extraction.tools.point_cloud import OrganizedCloud

logger = structlog.get_logger()

# Hypotheses scored per vectorized batch
HYPOTHESIS_CHUNK = 64


@dataclass
class _Consensus:
    plane: Plane
    inliers: np.ndarray  # positions into the remaining set


def _inlier_mask(
    plane_normals: np.ndarray,
    plane_offsets: np.ndarray,
    points: np.ndarray,
    normals: Optional[np.ndarray],
    cfg: RansacConfig,
) -> np.ndarray:
    """(M, k) inlier flags of M points against k planes."""
    close = np.abs(points @ plane_normals.T + plane_offsets) < cfg.distance_threshold
    if normals is None:
        return close
    return close & (normals @ plane_normals.T > cfg.normal_dot_threshold)


def _hypotheses(
    points: np.ndarray,
    rng: np.random.Generator,
    count: int,
    orient: Callable[[np.ndarray, np.ndarray, np.ndarray], np.ndarray],
) -> tuple[np.ndarray, np.ndarray]:
    """Unit normals (k, 3) and offsets (k,) of non-degenerate 3-point planes."""
    picks = rng.integers(0, len(points), size=(count, 3))
    p0, p1, p2 = points[picks[:, 0]], points[picks[:, 1]], points[picks[:, 2]]
    n = np.cross(p1 - p0, p2 - p0)
    norms = np.linalg.norm(n, axis=1)
    ok = norms > 1e-12
    n = n[ok] / norms[ok, None]
    p0 = p0[ok]
    signs = orient(n, p0, picks[ok, 0])
    n = n * signs[:, None]
    return n, -np.einsum("kj,kj->k", n, p0)


def _best_consensus(
    points: np.ndarray,
    normals: Optional[np.ndarray],
    cfg: RansacConfig,
    rng: np.random.Generator,
    orient: Callable[[np.ndarray, np.ndarray, np.ndarray], np.ndarray],
) -> Optional[_Consensus]:
    best_count, best_plane = -1, None
    remaining = cfg.hypotheses_per_plane
    while remaining > 0:
        batch = min(HYPOTHESIS_CHUNK, remaining)
        remaining -= batch
        hyp_normals, hyp_offsets = _hypotheses(points, rng, batch, orient)
        if len(hyp_normals) == 0:
            continue
        counts = _inlier_mask(hyp_normals, hyp_offsets, points, normals, cfg).sum(axis=0)
        k = int(np.argmax(counts))
        if counts[k] > best_count:
            best_count = int(counts[k])
            best_plane = (hyp_normals[k], hyp_offsets[k])
    if best_plane is None:
        return None
    normal, offset = best_plane
    inliers = np.nonzero(
        _inlier_mask(normal[None], np.array([offset]), points, normals, cfg)[:, 0]
    )[0]
    return _Consensus(Plane(normal, offset), inliers)


def _sequential_ransac(
    points: np.ndarray,
    normals: Optional[np.ndarray],
    cfg: RansacConfig,
    min_inliers: int,
    orient: Callable[[np.ndarray, np.ndarray, np.ndarray], np.ndarray],
    orient_refit: Callable[[Plane, np.ndarray, Optional[np.ndarray]], Plane],
) -> Iterator[tuple[Plane, np.ndarray]]:
    """
    Yield (refit plane, inlier positions into `points`) in extraction order.

    Raises:
        NoPlaneFound: the first round finds no consensus of `min_inliers` points
    """
    rng = np.random.default_rng(cfg.rng_seed)
    remaining = np.arange(len(points))
    extracted = 0

    while extracted < cfg.max_primitives and len(remaining) >= 3:
        sub_points = points[remaining]
        sub_normals = normals[remaining] if normals is not None else None
        consensus = _best_consensus(sub_points, sub_normals, cfg, rng, orient)
        if consensus is None or len(consensus.inliers) < min_inliers:
            break

        members = consensus.inliers
        refit = orient_refit(
            fit_plane(sub_points[members]),
            sub_points[members],
            sub_normals[members] if sub_normals is not None else None,
        )
        inliers = np.nonzero(
            _inlier_mask(refit.normal[None], np.array([refit.offset]), sub_points, sub_normals, cfg)[:, 0]
        )[0]
        if len(inliers) < min_inliers:
            break

        yield refit, remaining[inliers]
        extracted += 1
        keep = np.ones(len(remaining), dtype=bool)
        keep[inliers] = False
        remaining = remaining[keep]

    if extracted == 0:
        raise NoPlaneFound(
            "No plane hypothesis reached the minimum inlier count",
            points=int(len(points)),
            min_inliers=int(min_inliers),
        )


def _min_inliers(cfg: RansacConfig, total: int) -> int:
    return max(3, math.ceil(cfg.min_inlier_fraction * total))


# =============================================================================
# Query side: organized depth clouds
# =============================================================================

def _face_camera(normals: np.ndarray, anchors: np.ndarray, _picks: np.ndarray) -> np.ndarray:
    """Signs making n·p < 0 (equivalently d > 0)."""
    return np.where(np.einsum("kj,kj->k", normals, anchors) > 0, -1.0, 1.0)


def _refit_facing_camera(plane: Plane, inliers: np.ndarray, _normals: Optional[np.ndarray]) -> Plane:
    return plane.flipped() if float(plane.normal @ inliers.mean(axis=0)) > 0 else plane


def sequential_ransac_depth(cloud: OrganizedCloud, cfg: RansacConfig) -> list[QueryPrimitive]:
    """
    Extract query primitives from an organized cloud.

    Masks are pairwise disjoint and every mask pixel passes both inlier tests
    against its primitive's refit plane. Normals are oriented toward the camera.

    Raises:
        NoPlaneFound: fewer than 3 usable pixels, or no consensus in the first round
    """
    H, W = cloud.shape
    usable = np.flatnonzero(cloud.usable.ravel())
    if len(usable) < 3:
        raise NoPlaneFound("Depth map has fewer than 3 usable pixels", usable=int(len(usable)))

    points = cloud.points.reshape(-1, 3)[usable]
    normals = cloud.normals.reshape(-1, 3)[usable]
    primitives = []
    for plane, members in _sequential_ransac(
        points,
        normals,
        cfg,
        _min_inliers(cfg, H * W),
        _face_camera,
        _refit_facing_camera,
    ):
        mask = np.zeros(H * W, dtype=bool)
        mask[usable[members]] = True
        primitive = QueryPrimitive(plane=plane, mask=mask.reshape(H, W), index=len(primitives))
        primitives.append(primitive)
        logger.debug(
            "Query plane extracted",
            index=primitive.index,
            inliers=primitive.area,
            normal=[round(float(v), 4) for v in plane.normal],
            offset=round(plane.offset, 4),
        )
    return primitives


# =============================================================================
# Map side: unorganized points
# =============================================================================

def _hull_boundary(plane: Plane, points: np.ndarray) -> tuple[np.ndarray, float]:
    """Convex hull of inliers in the plane frame, lifted back to 3-D, and its area."""
    coords = to_plane_coords(plane, points)
    try:
        hull = ConvexHull(coords)
    except (QhullError, ValueError):
        return np.zeros((0, 3)), 0.0
    return from_plane_coords(plane, coords[hull.vertices]), float(hull.volume)


def sequential_ransac_points(
    points: np.ndarray,
    cfg: RansacConfig,
    normals: Optional[np.ndarray] = None,
) -> list[MapPrimitive]:
    """
    Extract map primitives from an unorganized point set.

    With `normals`, planes follow the input orientation and the normal-agreement
    test applies; without, the test is skipped and normals are turned toward the
    centroid of the whole point set (the room interior for indoor scans).
    Primitives below `cfg.min_area` are discarded.

    Raises:
        NoPlaneFound: fewer than 3 points, or no consensus in the first round
    """
    points = np.asarray(points, dtype=float).reshape(-1, 3)
    if len(points) < 3:
        raise NoPlaneFound("Need at least 3 points", points=int(len(points)))
    if normals is not None:
        normals = np.asarray(normals, dtype=float).reshape(-1, 3)
        normals = normals / np.linalg.norm(normals, axis=1, keepdims=True)
    interior = points.mean(axis=0)

    def orient(hyp_normals: np.ndarray, anchors: np.ndarray, picks: np.ndarray) -> np.ndarray:
        reference = normals[picks] if normals is not None else interior - anchors
        return np.where(np.einsum("kj,kj->k", hyp_normals, reference) < 0, -1.0, 1.0)

    def orient_refit(plane: Plane, inliers: np.ndarray, inlier_normals: Optional[np.ndarray]) -> Plane:
        if inlier_normals is not None:
            agree = float(np.sum(inlier_normals @ plane.normal))
        else:
            agree = float(plane.residual(interior))
        return plane.flipped() if agree < 0 else plane

    primitives = []
    for plane, members in _sequential_ransac(
        points, normals, cfg, _min_inliers(cfg, len(points)), orient, orient_refit
    ):
        boundary, area = _hull_boundary(plane, points[members])
        if area < cfg.min_area:
            logger.debug("Map plane discarded", inliers=int(len(members)), area=round(area, 5))
            continue
        primitive = MapPrimitive(plane=plane, boundary=boundary, area=area, index=len(primitives))
        primitive.sample_points = sample_primitive_points(
            primitive, cfg.sample_count, seed=cfg.rng_seed + primitive.index
        )
        primitives.append(primitive)
        logger.debug(
            "Map plane extracted",
            index=primitive.index,
            inliers=int(len(members)),
            area=round(area, 4),
        )
    if not primitives:
        logger.warning("Every extracted map plane was below the area threshold", min_area=cfg.min_area)
    return primitives
