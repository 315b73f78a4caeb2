"""
Noisy and contaminated correspondence sets for solver experiments.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.spatial.transform import Rotation

from rooms.pose.tools.rotation import PlaneCorrespondence
from services.geometry import Plane

DEFAULT_MIN_OUTLIER_ANGLE = 15.0

# Offsets of replacement planes are drawn from this range (meters)
OUTLIER_OFFSET_RANGE = (0.5, 4.0)


@dataclass
class CorruptedCorrespondences:
    correspondences: list[PlaneCorrespondence]
    inliers: list[int]
    outliers: list[int]


def _perturb_normal(normal: np.ndarray, sigma_deg: float, rng: np.random.Generator) -> np.ndarray:
    axis = np.cross(normal, rng.standard_normal(3))
    axis /= np.linalg.norm(axis)
    angle = math.radians(rng.normal(0.0, sigma_deg))
    return Rotation.from_rotvec(angle * axis).apply(normal)


def _random_normal_away_from(
    normal: np.ndarray,
    min_angle_deg: float,
    rng: np.random.Generator,
) -> np.ndarray:
    limit = math.cos(math.radians(min_angle_deg))
    while True:
        candidate = rng.standard_normal(3)
        candidate /= np.linalg.norm(candidate)
        if float(candidate @ normal) <= limit:
            return candidate


def corrupt_correspondences(
    pairs: Sequence[PlaneCorrespondence],
    outlier_rate: float,
    normal_noise_deg: float,
    offset_noise_m: float,
    scale: float,
    seed: int,
    min_outlier_angle_deg: float = DEFAULT_MIN_OUTLIER_ANGLE,
) -> CorruptedCorrespondences:
    """
    Degrade exact (metric) correspondences.

    Inliers get their query normal rotated by N(0, σ_n) degrees about a random
    perpendicular axis and N(0, σ_d) added to the offset; outliers get a random
    query plane at least `min_outlier_angle_deg` from the consistent normal. Every
    query offset is then divided by `scale` to emulate monocular mis-scale.
    """
    if not 0 <= outlier_rate < 1:
        raise ValueError("outlier_rate must lie in [0, 1)")
    if not scale > 0:
        raise ValueError("scale must be positive")
    rng = np.random.default_rng(seed)
    count = len(pairs)
    outliers = sorted(rng.choice(count, size=int(round(outlier_rate * count)), replace=False).tolist())
    outlier_set = set(outliers)

    corrupted = []
    for k, pair in enumerate(pairs):
        normal, offset = pair.query_plane.normal, pair.query_plane.offset
        if k in outlier_set:
            normal = _random_normal_away_from(normal, min_outlier_angle_deg, rng)
            offset = rng.uniform(*OUTLIER_OFFSET_RANGE)
        else:
            if normal_noise_deg > 0:
                normal = _perturb_normal(normal, normal_noise_deg, rng)
            if offset_noise_m > 0:
                offset = offset + rng.normal(0.0, offset_noise_m)

        changed = k in outlier_set or normal_noise_deg > 0 or offset_noise_m > 0 or scale != 1.0
        query_plane = Plane(normal, offset / scale) if changed else pair.query_plane
        corrupted.append(
            PlaneCorrespondence(
                query_plane=query_plane,
                map_plane=pair.map_plane,
                weight=pair.weight,
                query_index=pair.query_index,
                map_index=pair.map_index,
            )
        )

    return CorruptedCorrespondences(
        correspondences=corrupted,
        inliers=[k for k in range(count) if k not in outlier_set],
        outliers=outliers,
    )
