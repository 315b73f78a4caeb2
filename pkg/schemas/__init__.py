from .base import FORMAT_VERSION, FileModel, VersionedModel
from .scene import (
    IntrinsicsSchema,
    MapPrimitiveSchema,
    QueryPrimitiveSchema,
    LabelsSchema,
    MapFile,
    LabelsFile,
    QueryRecordFile,
    ManifestFile,
)
from .results import (
    PoseFile,
    EstimateRecord,
    EstimateFile,
    EstimatesFile,
    GroundTruthEntry,
    GroundTruthFile,
    CorrespondenceSchema,
    QueryMatches,
    MatchesFile,
    EmbeddingsFile,
    WeightsFile,
    PrimitivesFile,
    MetricsFile,
)

__all__ = [
    "FORMAT_VERSION",
    "FileModel",
    "VersionedModel",
    "IntrinsicsSchema",
    "MapPrimitiveSchema",
    "QueryPrimitiveSchema",
    "LabelsSchema",
    "MapFile",
    "LabelsFile",
    "QueryRecordFile",
    "ManifestFile",
    "PoseFile",
    "EstimateRecord",
    "EstimateFile",
    "EstimatesFile",
    "GroundTruthEntry",
    "GroundTruthFile",
    "CorrespondenceSchema",
    "QueryMatches",
    "MatchesFile",
    "EmbeddingsFile",
    "WeightsFile",
    "PrimitivesFile",
    "MetricsFile",
]
