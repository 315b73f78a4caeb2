"""
Error types raised across the relocalization pipeline.

Every error carries a structured `detail` dict (logged as key-value pairs) and
derives from ValueError so generic callers can catch it idiomatically.
"""
from typing import Any, Optional


class PlaneLocError(ValueError):
    """Base class for all pipeline errors."""

    code = "planeloc_error"

    def __init__(self, message: str, **detail: Any):
        super().__init__(message)
        self.message = message
        self.detail = {"error": self.code, **detail}


# Geometry
class LogNearSingularity(PlaneLocError):
    code = "log_near_singularity"


class DegenerateNormals(PlaneLocError):
    code = "degenerate_normals"


class BehindCamera(PlaneLocError):
    code = "behind_camera"


class RayParallel(PlaneLocError):
    code = "ray_parallel"


class NegativeDepth(PlaneLocError):
    code = "negative_depth"


# Extraction
class NoPlaneFound(PlaneLocError):
    code = "no_plane_found"


# Matching
class ShapeMismatch(PlaneLocError):
    code = "shape_mismatch"


class DimensionMismatch(PlaneLocError):
    code = "dimension_mismatch"


# Pose solving
class ParallelNormals(PlaneLocError):
    code = "parallel_normals"


class InsufficientCorrespondences(PlaneLocError):
    code = "insufficient_correspondences"


class AllPairsParallel(PlaneLocError):
    code = "all_pairs_parallel"


class RankDeficient(PlaneLocError):
    code = "rank_deficient"


# Simulation
class SamplingExhausted(PlaneLocError):
    code = "sampling_exhausted"


# I/O
class ParseError(PlaneLocError):
    """Malformed file, with the offending location when known."""

    code = "parse_error"

    def __init__(
        self,
        message: str,
        path: Optional[str] = None,
        line: Optional[int] = None,
        field: Optional[str] = None,
    ):
        location = ", ".join(
            part for part in (
                path,
                f"line {line}" if line is not None else None,
                f"field '{field}'" if field else None,
            ) if part
        )
        super().__init__(
            f"{message} ({location})" if location else message,
            path=path,
            line=line,
            field=field,
        )


class VersionMismatch(PlaneLocError):
    code = "version_mismatch"


class LengthMismatch(PlaneLocError):
    code = "length_mismatch"
