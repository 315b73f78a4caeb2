"""
Plane / pose algebra shared by every stage.

Conventions:
- A plane is (n, d) with unit normal n and the equation n·x + d = 0.
- A Pose [R | t] maps camera-frame points to map-frame points: x_m = R x_c + t.
- A twist is the 6-vector (ω, v): rotational part first, then translational part.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numpy as np
from scipy import linalg

from services.errors import DegenerateNormals, LogNearSingularity

# Below this angle, trigonometric coefficients switch to Taylor expansions
SMALL_ANGLE = 1e-5

# log() refuses rotations this close to π (axis becomes ill-defined)
LOG_SINGULARITY_MARGIN = 1e-6

# Kabsch: source normals closer than this to parallel cannot fix a rotation
PARALLEL_TOLERANCE_RAD = 1e-6


@dataclass(frozen=True, eq=False)
class Plane:
    """Plane n·x + d = 0. The normal is normalized on construction."""
    normal: np.ndarray
    offset: float

    def __post_init__(self):
        normal = np.asarray(self.normal, dtype=float).reshape(3)
        norm = float(np.linalg.norm(normal))
        if not np.isfinite(norm) or norm < 1e-12:
            raise DegenerateNormals("Plane normal must be a nonzero finite vector", norm=norm)
        object.__setattr__(self, "normal", normal / norm)
        object.__setattr__(self, "offset", float(self.offset) / norm)

    def residual(self, points: np.ndarray) -> np.ndarray:
        """Signed distance n·x + d for one point or an (N, 3) array."""
        return np.asarray(points, dtype=float) @ self.normal + self.offset

    def flipped(self) -> "Plane":
        return Plane(-self.normal, -self.offset)

    def scaled_offset(self, factor: float) -> "Plane":
        return Plane(self.normal, self.offset * factor)

    def to_list(self) -> list[float]:
        return [float(v) for v in self.normal] + [float(self.offset)]

    @classmethod
    def from_list(cls, values: Sequence[float]) -> "Plane":
        if len(values) != 4:
            raise ValueError(f"Plane needs 4 numbers, got {len(values)}")
        return cls(np.asarray(values[:3], dtype=float), float(values[3]))


@dataclass(frozen=True, eq=False)
class Pose:
    """Rigid camera-to-map transform [R | t]."""
    rotation: np.ndarray
    translation: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "rotation", np.asarray(self.rotation, dtype=float).reshape(3, 3))
        object.__setattr__(self, "translation", np.asarray(self.translation, dtype=float).reshape(3))

    @classmethod
    def identity(cls) -> "Pose":
        return cls(np.eye(3), np.zeros(3))

    def apply(self, points: np.ndarray) -> np.ndarray:
        """Map one point or an (N, 3) array through the pose."""
        return np.asarray(points, dtype=float) @ self.rotation.T + self.translation

    def as_matrix(self) -> np.ndarray:
        matrix = np.eye(4)
        matrix[:3, :3] = self.rotation
        matrix[:3, 3] = self.translation
        return matrix

    def to_list(self) -> list[float]:
        """Row-major 3×4 matrix as 12 numbers."""
        return [float(v) for v in self.as_matrix()[:3].reshape(-1)]

    @classmethod
    def from_list(cls, values: Sequence[float]) -> "Pose":
        if len(values) != 12:
            raise ValueError(f"Pose needs 12 numbers, got {len(values)}")
        matrix = np.asarray(values, dtype=float).reshape(3, 4)
        return cls(matrix[:, :3], matrix[:, 3])

    @property
    def center(self) -> np.ndarray:
        """Camera center in map coordinates."""
        return self.translation


@dataclass(frozen=True)
class Intrinsics:
    """Pinhole intrinsics; pixel centers sit at integer coordinates."""
    fx: float
    fy: float
    cx: float
    cy: float
    width: int
    height: int

    def __post_init__(self):
        if self.fx <= 0 or self.fy <= 0:
            raise ValueError("focal lengths must be positive")
        if not (0 < self.cx < self.width and 0 < self.cy < self.height):
            raise ValueError("principal point must lie inside the image")

    @property
    def matrix(self) -> np.ndarray:
        return np.array([[self.fx, 0.0, self.cx], [0.0, self.fy, self.cy], [0.0, 0.0, 1.0]])

    def downsampled(self, factor: int) -> "Intrinsics":
        """Intrinsics of the image obtained by keeping every `factor`-th pixel."""
        if factor == 1:
            return self
        return Intrinsics(
            fx=self.fx / factor,
            fy=self.fy / factor,
            cx=self.cx / factor,
            cy=self.cy / factor,
            width=len(range(0, self.width, factor)),
            height=len(range(0, self.height, factor)),
        )

    def to_dict(self) -> dict:
        return {
            "fx": self.fx, "fy": self.fy, "cx": self.cx, "cy": self.cy,
            "width": self.width, "height": self.height,
        }


# =============================================================================
# so(3) / SE(3)
# =============================================================================

def skew(v: np.ndarray) -> np.ndarray:
    """Skew-symmetric matrix from 3-vector (hat operator)."""
    x, y, z = np.asarray(v, dtype=float).reshape(3)
    return np.array([[0.0, -z, y], [z, 0.0, -x], [-y, x, 0.0]])


def unskew(S: np.ndarray) -> np.ndarray:
    """Extract 3-vector from skew-symmetric matrix (vee operator)."""
    return np.array([S[2, 1], S[0, 2], S[1, 0]], dtype=float)


def _so3_coefficients(theta: float) -> tuple[float, float, float]:
    """A = sinθ/θ, B = (1−cosθ)/θ², C = (θ−sinθ)/θ³."""
    if theta < SMALL_ANGLE:
        t2 = theta * theta
        return 1.0 - t2 / 6.0, 0.5 - t2 / 24.0, 1.0 / 6.0 - t2 / 120.0
    return (
        math.sin(theta) / theta,
        (1.0 - math.cos(theta)) / theta**2,
        (theta - math.sin(theta)) / theta**3,
    )


def so3_exp(omega: np.ndarray) -> np.ndarray:
    """Rodrigues' formula."""
    omega = np.asarray(omega, dtype=float).reshape(3)
    theta = float(np.linalg.norm(omega))
    a, b, _ = _so3_coefficients(theta)
    K = skew(omega)
    return np.eye(3) + a * K + b * (K @ K)


def so3_log(R: np.ndarray) -> np.ndarray:
    """Rotation vector of R; raises LogNearSingularity within 1e-6 of π."""
    R = np.asarray(R, dtype=float)
    vee = unskew(R - R.T) / 2.0
    sin_theta = float(np.linalg.norm(vee))
    cos_theta = (float(np.trace(R)) - 1.0) / 2.0
    theta = math.atan2(sin_theta, cos_theta)
    if theta >= math.pi - LOG_SINGULARITY_MARGIN:
        raise LogNearSingularity("Rotation angle too close to π for log", angle=theta)
    if theta < SMALL_ANGLE:
        return vee * (1.0 + theta * theta / 6.0)
    return vee * (theta / sin_theta)


def se3_exp(xi: np.ndarray) -> Pose:
    """Exponential map: twist (ω, v) → Pose with t = V v."""
    xi = np.asarray(xi, dtype=float).reshape(6)
    omega, v = xi[:3], xi[3:]
    theta = float(np.linalg.norm(omega))
    a, b, c = _so3_coefficients(theta)
    K = skew(omega)
    K2 = K @ K
    R = np.eye(3) + a * K + b * K2
    V = np.eye(3) + b * K + c * K2
    return Pose(R, V @ v)


def se3_log(pose: Pose) -> np.ndarray:
    """Logarithm map: Pose → twist (ω, v)."""
    omega = so3_log(pose.rotation)
    theta = float(np.linalg.norm(omega))
    K = skew(omega)
    if theta < SMALL_ANGLE:
        coeff = 1.0 / 12.0 + theta * theta / 720.0
    else:
        coeff = (1.0 - theta * math.sin(theta) / (2.0 * (1.0 - math.cos(theta)))) / theta**2
    V_inv = np.eye(3) - 0.5 * K + coeff * (K @ K)
    return np.concatenate([omega, V_inv @ pose.translation])


def compose(a: Pose, b: Pose) -> Pose:
    """a ∘ b: apply b first, then a."""
    return Pose(a.rotation @ b.rotation, a.rotation @ b.translation + a.translation)


def invert(pose: Pose) -> Pose:
    Rt = pose.rotation.T
    return Pose(Rt, -Rt @ pose.translation)


# =============================================================================
# Planes
# =============================================================================

def transform_plane(pose: Pose, plane: Plane) -> Plane:
    """Carry a plane through a pose: n' = R n, d' = d − t⊤n'."""
    normal = pose.rotation @ plane.normal
    return Plane(normal, plane.offset - float(pose.translation @ normal))


def fit_plane(points: np.ndarray, weights: Optional[np.ndarray] = None) -> Plane:
    """Total-least-squares plane: smallest principal direction of the scatter."""
    points = np.asarray(points, dtype=float)
    if points.shape[0] < 3:
        raise DegenerateNormals("Need at least 3 points to fit a plane", count=int(points.shape[0]))
    if weights is None:
        centroid = points.mean(axis=0)
        centered = points - centroid
    else:
        w = np.asarray(weights, dtype=float)
        centroid = (w[:, None] * points).sum(axis=0) / w.sum()
        centered = (points - centroid) * np.sqrt(w)[:, None]
    _, _, vt = linalg.svd(centered, full_matrices=False)
    normal = vt[-1]
    return Plane(normal, -float(normal @ centroid))


def plane_basis(plane: Plane) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(origin, e1, e2): an orthonormal in-plane frame anchored at the foot of the origin."""
    n = plane.normal
    helper = np.array([1.0, 0.0, 0.0]) if abs(n[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
    e1 = np.cross(n, helper)
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(n, e1)
    return -plane.offset * n, e1, e2


# =============================================================================
# Rotation estimation
# =============================================================================

def kabsch(
    pairs: Iterable[tuple[np.ndarray, np.ndarray]],
    weights: Optional[Sequence[float]] = None,
) -> np.ndarray:
    """
    Weighted rotation minimizing Σ wᵢ‖mᵢ − R qᵢ‖² over (qᵢ, mᵢ) direction pairs.

    Raises:
        DegenerateNormals: fewer than 2 pairs, or all source vectors parallel.
    """
    pairs = list(pairs)
    if len(pairs) < 2:
        raise DegenerateNormals("Kabsch needs at least 2 pairs", count=len(pairs))
    source = np.array([np.asarray(q, dtype=float) for q, _ in pairs])
    target = np.array([np.asarray(m, dtype=float) for _, m in pairs])
    w = np.ones(len(pairs)) if weights is None else np.asarray(weights, dtype=float)
    if np.any(w < 0):
        raise ValueError("Kabsch weights must be nonnegative")

    spread = np.linalg.norm(np.cross(source, source[0]), axis=1)
    if np.all(spread[w > 0] < math.sin(PARALLEL_TOLERANCE_RAD)):
        raise DegenerateNormals("All source normals are parallel", count=len(pairs))

    H = (source * w[:, None]).T @ target
    U, _, Vt = linalg.svd(H)
    S = np.eye(3)
    if np.linalg.det(Vt.T @ U.T) < 0:
        S[2, 2] = -1.0
    return Vt.T @ S @ U.T


def look_at(center: np.ndarray, forward: np.ndarray, up: np.ndarray = (0.0, 0.0, 1.0)) -> Pose:
    """
    Camera-to-map pose of a camera at `center` looking along `forward`.

    Camera axes: x right, y down, z forward. Falls back to up = (0, 1, 0) when the
    viewing direction is within 1° of the requested up vector.
    """
    z_axis = np.asarray(forward, dtype=float)
    z_axis = z_axis / np.linalg.norm(z_axis)
    up = np.asarray(up, dtype=float)
    up = up / np.linalg.norm(up)
    if abs(float(z_axis @ up)) > math.cos(math.radians(1.0)):
        up = np.array([0.0, 1.0, 0.0])
    x_axis = np.cross(z_axis, up)
    x_axis /= np.linalg.norm(x_axis)
    y_axis = np.cross(z_axis, x_axis)
    return Pose(np.column_stack([x_axis, y_axis, z_axis]), np.asarray(center, dtype=float))


# =============================================================================
# Errors between poses
# =============================================================================

def rotation_angle(Ra: np.ndarray, Rb: np.ndarray) -> float:
    """Geodesic angle between two rotations, in degrees."""
    M = np.asarray(Ra).T @ np.asarray(Rb)
    sin_angle = 0.5 * math.hypot(M[2, 1] - M[1, 2], M[0, 2] - M[2, 0], M[1, 0] - M[0, 1])
    cos_angle = (float(np.trace(M)) - 1.0) / 2.0
    return math.degrees(math.atan2(sin_angle, cos_angle))


def translation_distance(ta: np.ndarray, tb: np.ndarray) -> float:
    """Euclidean distance in meters."""
    return float(np.linalg.norm(np.asarray(ta, dtype=float) - np.asarray(tb, dtype=float)))
