"""
Rotation from plane correspondences.

Plane normals transform as n^m = R n^q regardless of translation, so rotation is
estimated from normals alone: a two-pair minimal solver inside RANSAC picks the
consensus set, and weighted Kabsch refines it.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations
from typing import Sequence

import numpy as np
import structlog

from config.experiment import SolverConfig
from services.errors import AllPairsParallel, InsufficientCorrespondences, ParallelNormals
from services.geometry import Plane, kabsch

logger = structlog.get_logger()


@dataclass(frozen=True, eq=False)
class PlaneCorrespondence:
    """A putative (query plane, map plane) pair weighted by the query mask area."""
    query_plane: Plane
    map_plane: Plane
    weight: float
    query_index: int = -1
    map_index: int = -1

    def __post_init__(self):
        if not self.weight > 0:
            raise ValueError(f"Correspondence weight must be positive, got {self.weight}")


def _angle_deg(a: np.ndarray, b: np.ndarray) -> float:
    return math.degrees(math.acos(min(1.0, max(-1.0, float(a @ b)))))


def _triad(u: np.ndarray, w: np.ndarray) -> np.ndarray:
    """Orthonormal frame [u, v, u×v] with v the Gram-Schmidt residue of w."""
    v = w - (w @ u) * u
    v = v / np.linalg.norm(v)
    return np.column_stack([u, v, np.cross(u, v)])


def minimal_rotation(
    pair_a: PlaneCorrespondence,
    pair_b: PlaneCorrespondence,
    min_normal_separation: float = 5.0,
) -> np.ndarray:
    """
    Rotation fixed by two correspondences with non-parallel normals.

    Raises:
        ParallelNormals: either side's normals are closer than `min_normal_separation` degrees
    """
    qa, qb = pair_a.query_plane.normal, pair_b.query_plane.normal
    ma, mb = pair_a.map_plane.normal, pair_b.map_plane.normal
    query_gap, map_gap = _angle_deg(qa, qb), _angle_deg(ma, mb)
    for gap in (query_gap, map_gap):
        if gap < min_normal_separation or gap > 180.0 - min_normal_separation:
            raise ParallelNormals(
                "Minimal solver needs non-parallel normals",
                query_angle=query_gap,
                map_angle=map_gap,
            )
    return _triad(ma, mb) @ _triad(qa, qb).T


def angular_residuals(R: np.ndarray, corrs: Sequence[PlaneCorrespondence]) -> np.ndarray:
    """Angle in degrees between R n^q and n^m for every correspondence."""
    rotated = np.array([R @ c.query_plane.normal for c in corrs])
    targets = np.array([c.map_plane.normal for c in corrs])
    cosines = np.clip(np.einsum("ij,ij->i", rotated, targets), -1.0, 1.0)
    return np.degrees(np.arccos(cosines))


def _separated(a: PlaneCorrespondence, b: PlaneCorrespondence, min_sep: float) -> bool:
    for u, v in ((a.query_plane.normal, b.query_plane.normal), (a.map_plane.normal, b.map_plane.normal)):
        gap = _angle_deg(u, v)
        if gap < min_sep or gap > 180.0 - min_sep:
            return False
    return True


def ransac_rotation(
    corrs: Sequence[PlaneCorrespondence],
    cfg: SolverConfig,
) -> tuple[list[int], np.ndarray]:
    """
    Largest angular-consensus set over minimal two-pair rotation hypotheses.

    Hypotheses are drawn without repetition from the pairs whose normals are
    separated on both sides; ties in inlier count go to the lower total angular
    residual.

    Returns:
        (sorted inlier indices into `corrs`, rotation hypothesis)

    Raises:
        InsufficientCorrespondences: fewer than 2 correspondences
        AllPairsParallel: no pair has non-parallel normals
    """
    if len(corrs) < 2:
        raise InsufficientCorrespondences(
            "Rotation RANSAC needs at least 2 correspondences", count=len(corrs)
        )
    pairs = [
        (a, b)
        for a, b in combinations(range(len(corrs)), 2)
        if _separated(corrs[a], corrs[b], cfg.min_normal_separation)
    ]
    if not pairs:
        raise AllPairsParallel("Every correspondence pair has parallel normals", count=len(corrs))

    rng = np.random.default_rng(cfg.rng_seed)
    order = rng.permutation(len(pairs))[: cfg.ransac_iterations]

    best_key, best_inliers, best_R = None, [], np.eye(3)
    for k in order:
        a, b = pairs[k]
        R = minimal_rotation(corrs[a], corrs[b], cfg.min_normal_separation)
        residuals = angular_residuals(R, corrs)
        inliers = residuals <= cfg.inlier_angle_threshold
        key = (int(inliers.sum()), -float(residuals[inliers].sum()))
        if best_key is None or key > best_key:
            best_key, best_inliers, best_R = key, np.flatnonzero(inliers).tolist(), R

    logger.debug(
        "Rotation consensus",
        hypotheses=int(len(order)),
        inliers=len(best_inliers),
        total=len(corrs),
    )
    return best_inliers, best_R


def refine_rotation(inliers: Sequence[PlaneCorrespondence]) -> np.ndarray:
    """Weighted Kabsch over (n^q, n^m) pairs; raises DegenerateNormals."""
    return kabsch(
        [(c.query_plane.normal, c.map_plane.normal) for c in inliers],
        [c.weight for c in inliers],
    )
