"""
Pydantic schemas for pipeline inputs and outputs: poses, estimates, matches,
embeddings and matcher weights.
"""
from typing import Optional

from pydantic import Field

from schemas.base import FileModel, VersionedModel
from schemas.scene import IntrinsicsSchema, LabelsSchema, QueryPrimitiveSchema


# =====================
# Poses
# =====================

class PoseFile(VersionedModel):
    """Row-major 3×4 camera-to-map matrix."""
    pose: list[float] = Field(min_length=12, max_length=12)


class EstimateRecord(FileModel):
    """One query's pose output (estimates/NNNN.json and estimates.json entries)."""
    query_index: int = Field(ge=0)
    pose: list[float] = Field(min_length=12, max_length=12)
    scale: float = 1.0
    inlier_indices: list[int] = Field(default_factory=list)
    degenerate: bool = False
    fallback_used: bool = False
    refined: bool = False
    failed_room: Optional[str] = None
    refinement: Optional[dict] = None


class EstimateFile(VersionedModel):
    estimate: EstimateRecord


class EstimatesFile(VersionedModel):
    estimates: list[EstimateRecord]


class GroundTruthEntry(FileModel):
    query_index: int = Field(ge=0)
    pose: list[float] = Field(min_length=12, max_length=12)


class GroundTruthFile(VersionedModel):
    poses: list[GroundTruthEntry]


# =====================
# Matching
# =====================

class CorrespondenceSchema(FileModel):
    query_idx: int = Field(ge=0)
    map_idx: int = Field(ge=0)
    score: float


class QueryMatches(FileModel):
    """Predictions of one query with what evaluation needs to score them."""
    query_index: int = Field(ge=0)
    predictions: list[CorrespondenceSchema] = Field(default_factory=list)
    labels: Optional[LabelsSchema] = None
    ious: list[list[float]] = Field(default_factory=list)


class MatchesFile(VersionedModel):
    queries: list[QueryMatches]


class EmbeddingsFile(VersionedModel):
    query: list[list[float]]
    map: list[list[float]]


class ProjectionSchema(FileModel):
    weight: list
    bias: list


class WeightsFile(VersionedModel):
    """Matcher weights; layer tensors are nested lists keyed by parameter name."""
    c: int = Field(ge=2)
    N: int = Field(ge=1)
    heads: int = Field(ge=1)
    ffn_hidden: Optional[int] = None
    layers: list[dict[str, list]]
    rope_bases: list[list[list[float]]]
    similarity_proj: ProjectionSchema
    matchability_proj: ProjectionSchema


# =====================
# Reports
# =====================

class PrimitivesFile(VersionedModel):
    """Output of `planeloc fit-planes`: recovered planes plus their index raster."""
    intrinsics: IntrinsicsSchema
    masks_file: str = "masks.pgm"
    primitives: list[QueryPrimitiveSchema] = Field(default_factory=list)


class MetricsFile(VersionedModel):
    """metrics.json: pose metrics and, when predictions were scored, matching metrics."""
    pose: dict
    matching: Optional[dict] = None
    queries: int = Field(ge=0)
    failed_queries: list[int] = Field(default_factory=list)
