"""
Translation and monocular scale from plane offsets.

Under mis-scaled query depth the offsets relate by d^m = s·d^q − t⊤n^m, which is
linear in x = [t; s]. Each inlier contributes the row [−(n^m)⊤, d^q] with target
d^m, weighted by √ω, and the system is solved in closed form.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
import structlog
from scipy import linalg

from services.errors import RankDeficient
from rooms.pose.tools.rotation import PlaneCorrespondence

logger = structlog.get_logger()

# Map normals must span 3-D: smallest singular value of the stacked normals
MIN_NORMAL_SPREAD = 1e-6

# Σ ω (d^q)² below this leaves the scale unobservable
SCALE_OBSERVABILITY = 1e-9


@dataclass
class TranslationScale:
    translation: np.ndarray
    scale: float
    scale_fixed: bool = False


def solve_translation_scale(
    inliers: Sequence[PlaneCorrespondence],
    estimate_scale: bool = True,
) -> TranslationScale:
    """
    Weighted least-squares (t, s).

    When the query offsets carry no scale information, or `estimate_scale` is
    off, s is fixed to 1 and only t is solved.

    Raises:
        RankDeficient: fewer than 3 inliers or map normals not spanning 3-D
    """
    if len(inliers) < 3:
        raise RankDeficient("Translation needs at least 3 inliers", count=len(inliers))

    normals = np.array([c.map_plane.normal for c in inliers])
    d_query = np.array([c.query_plane.offset for c in inliers])
    d_map = np.array([c.map_plane.offset for c in inliers])
    weights = np.array([c.weight for c in inliers], dtype=float)

    spread = linalg.svdvals(normals)[-1]
    if spread <= MIN_NORMAL_SPREAD:
        raise RankDeficient("Map normals do not span 3-D", smallest_singular_value=float(spread))

    root_w = np.sqrt(weights)[:, None]
    observable = float(np.sum(weights * d_query**2)) >= SCALE_OBSERVABILITY
    if estimate_scale and observable:
        rows = np.column_stack([-normals, d_query]) * root_w
        solution, _, rank, _ = linalg.lstsq(rows, d_map * root_w[:, 0])
        if rank < 4:
            raise RankDeficient("Translation/scale system is rank deficient", rank=int(rank))
        return TranslationScale(translation=solution[:3], scale=float(solution[3]))

    if not observable:
        logger.debug("Scale unobservable, fixing s = 1", weighted_offsets=float(np.sum(weights * d_query**2)))
    rows = -normals * root_w
    solution, _, rank, _ = linalg.lstsq(rows, (d_map - d_query) * root_w[:, 0])
    if rank < 3:
        raise RankDeficient("Translation system is rank deficient", rank=int(rank))
    return TranslationScale(translation=solution, scale=1.0, scale_fixed=True)
