"""
Pydantic schemas for scene directories: map, query records and manifest.
"""
from typing import Optional

from pydantic import Field

from schemas.base import FileModel, VersionedModel


# =====================
# Geometry
# =====================

class IntrinsicsSchema(FileModel):
    fx: float = Field(gt=0)
    fy: float = Field(gt=0)
    cx: float
    cy: float
    width: int = Field(ge=1)
    height: int = Field(ge=1)


class MapPrimitiveSchema(FileModel):
    """Map primitive: plane, polygon boundary, area and optional point samples."""
    index: int = Field(ge=0)
    normal: list[float] = Field(min_length=3, max_length=3)
    offset: float
    boundary: list[list[float]] = Field(min_length=3)
    area: float = Field(ge=0)
    sample_points: Optional[list[list[float]]] = None


class QueryPrimitiveSchema(FileModel):
    """Query primitive; its mask lives in the query's index raster."""
    index: int = Field(ge=0)
    normal: list[float] = Field(min_length=3, max_length=3)
    offset: float
    area: int = Field(ge=1)


class LabelsSchema(FileModel):
    matches: list[tuple[int, int]] = Field(default_factory=list)
    unmatched_query: list[int] = Field(default_factory=list)
    unmatched_map: list[int] = Field(default_factory=list)
    query_count: int = Field(ge=0)
    map_count: int = Field(ge=0)


# =====================
# Files
# =====================

class MapFile(VersionedModel):
    """map.json"""
    primitives: list[MapPrimitiveSchema]


class LabelsFile(VersionedModel):
    labels: LabelsSchema


class QueryRecordFile(VersionedModel):
    """queries/NNNN/record.json"""
    index: int = Field(ge=0)
    intrinsics: IntrinsicsSchema
    gt_pose: list[float] = Field(min_length=12, max_length=12)
    scale: float = Field(gt=0)
    depth_file: str = "depth.dpth"
    masks_file: str = "masks.pgm"
    primitives: list[QueryPrimitiveSchema] = Field(default_factory=list)
    labels: Optional[LabelsSchema] = None
    visible: list[int] = Field(default_factory=list)


class ManifestFile(VersionedModel):
    """manifest.json written by `planeloc synth`."""
    seed: int
    map_file: str = "map.json"
    primitive_count: int = Field(ge=0)
    queries: list[str] = Field(default_factory=list)
    spec: dict = Field(default_factory=dict)
