"""
Scene directories on disk.

    <scene>/map.json
    <scene>/manifest.json
    <scene>/queries/NNNN/record.json   intrinsics, GT pose, scale, primitives, labels
    <scene>/queries/NNNN/depth.dpth
    <scene>/queries/NNNN/masks.pgm     index raster: primitive index + 1, 0 = none
"""
from __future__ import annotations

from pathlib import Path
from typing import Optional

import numpy as np
import structlog

from config.experiment import SceneSpec
from rooms.matching.tools.labels import MatchLabels
from schemas.scene import (
    IntrinsicsSchema,
    LabelsFile,
    LabelsSchema,
    ManifestFile,
    QueryPrimitiveSchema,
    QueryRecordFile,
)
from services.errors import ParseError
from services.geometry import Intrinsics, Plane, Pose
from services.primitives import MapPrimitive, QueryPrimitive
from services.storage import (
    load_depth,
    load_map,
    load_pgm,
    read_json,
    save_depth,
    save_map,
    save_pgm,
    write_json,
)
from simulation.scene import QueryRecord

logger = structlog.get_logger()

MAP_FILE = "map.json"
MANIFEST_FILE = "manifest.json"
QUERIES_DIR = "queries"


def query_dir_name(index: int) -> str:
    return f"{index:04d}"


# =============================================================================
# Labels and masks
# =============================================================================

def labels_schema(labels: MatchLabels) -> LabelsSchema:
    return LabelsSchema.model_validate(labels.to_dict())


def labels_from_schema(schema: LabelsSchema) -> MatchLabels:
    return MatchLabels.from_dict(schema.model_dump())


def save_labels(path: Path, labels: MatchLabels) -> Path:
    return write_json(path, LabelsFile(labels=labels_schema(labels)))


def load_labels(path: Path) -> MatchLabels:
    return labels_from_schema(read_json(path, LabelsFile).labels)


def index_raster(primitives: list[QueryPrimitive], height: int, width: int) -> np.ndarray:
    """Primitive index + 1 per pixel, 0 where no mask covers it."""
    raster = np.zeros((height, width), dtype=int)
    for primitive in primitives:
        raster[primitive.mask] = primitive.index + 1
    return raster


# =============================================================================
# Query records
# =============================================================================

def save_query_record(directory: Path, record: QueryRecord) -> Path:
    directory = Path(directory)
    K = record.intrinsics
    document = QueryRecordFile(
        index=record.index,
        intrinsics=IntrinsicsSchema(**K.to_dict()),
        gt_pose=record.gt_pose.to_list(),
        scale=record.scale,
        primitives=[
            QueryPrimitiveSchema(
                index=p.index,
                normal=[float(v) for v in p.plane.normal],
                offset=float(p.plane.offset),
                area=p.area,
            )
            for p in record.query_primitives
        ],
        labels=labels_schema(record.labels),
        visible=record.visible,
    )
    save_depth(directory / document.depth_file, record.depth)
    save_pgm(directory / document.masks_file, index_raster(record.query_primitives, K.height, K.width))
    return write_json(directory / "record.json", document)


def load_query_record(directory: Path) -> QueryRecord:
    directory = Path(directory)
    document = read_json(directory / "record.json", QueryRecordFile)
    K = Intrinsics(**document.intrinsics.model_dump())
    depth = load_depth(directory / document.depth_file)
    raster = load_pgm(directory / document.masks_file)
    if raster.shape != (K.height, K.width) or depth.values.shape != (K.height, K.width):
        raise ParseError("Raster size disagrees with the intrinsics", path=str(directory), field="intrinsics")

    primitives = []
    for entry in document.primitives:
        mask = raster == entry.index + 1
        if not mask.any():
            raise ParseError("Primitive has no pixels in the mask raster", path=str(directory), field=f"primitives.{entry.index}")
        primitives.append(QueryPrimitive(plane=Plane(np.array(entry.normal), entry.offset), mask=mask, index=entry.index))

    return QueryRecord(
        index=document.index,
        intrinsics=K,
        gt_pose=Pose.from_list(document.gt_pose),
        depth=depth,
        scale=document.scale,
        query_primitives=primitives,
        labels=labels_from_schema(document.labels) if document.labels else None,
        visible=document.visible,
    )


# =============================================================================
# Whole scenes
# =============================================================================

def save_scene(
    directory: Path,
    spec: SceneSpec,
    map_primitives: list[MapPrimitive],
    queries: list[QueryRecord],
) -> ManifestFile:
    directory = Path(directory)
    save_map(directory / MAP_FILE, map_primitives)
    names = []
    for record in queries:
        name = f"{QUERIES_DIR}/{query_dir_name(record.index)}"
        save_query_record(directory / name, record)
        names.append(name)
    manifest = ManifestFile(
        seed=spec.rng_seed,
        map_file=MAP_FILE,
        primitive_count=len(map_primitives),
        queries=names,
        spec=spec.model_dump(mode="json"),
    )
    write_json(directory / MANIFEST_FILE, manifest)
    logger.info("Scene written", directory=str(directory), queries=len(queries))
    return manifest


def load_scene(directory: Path, limit: Optional[int] = None) -> tuple[list[MapPrimitive], list[QueryRecord]]:
    directory = Path(directory)
    manifest = read_json(directory / MANIFEST_FILE, ManifestFile)
    map_primitives = load_map(directory / manifest.map_file)
    names = manifest.queries if limit is None else manifest.queries[:limit]
    queries = [load_query_record(directory / name) for name in names]
    return map_primitives, queries
