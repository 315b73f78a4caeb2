"""
File formats: versioned JSON documents, the DPTH depth format, PGM index rasters
and CSV reports.

JSON is written with sorted keys and shortest round-trip float repr, so rewriting
the same values gives byte-identical files. Readers raise ParseError (with line or
field when known) for malformed content and VersionMismatch for a foreign
format_version; unknown JSON fields are ignored with a warning.
"""
from __future__ import annotations

import csv
import json
import re
import struct
from pathlib import Path
from typing import Any, Iterable, Sequence, Type, TypeVar

import numpy as np
import structlog
from pydantic import BaseModel, ValidationError

from config.settings import settings
from schemas.base import FORMAT_VERSION
from schemas.results import EmbeddingsFile, PoseFile, WeightsFile
from schemas.scene import MapFile, MapPrimitiveSchema
from services.camera import INVALID_DEPTH, DepthMap
from services.errors import ParseError, VersionMismatch
from services.geometry import Plane, Pose
from services.primitives import MapPrimitive

logger = structlog.get_logger()

Model = TypeVar("Model", bound=BaseModel)

DEPTH_MAGIC = b"DPTH"
DEPTH_HEADER = struct.Struct("<4sIIf")

_PGM_HEADER = re.compile(rb"P5\s+(\d+)\s+(\d+)\s+(\d+)\s")


# =============================================================================
# JSON
# =============================================================================

def dumps(payload: Any) -> str:
    return json.dumps(payload, sort_keys=True, indent=2, allow_nan=False) + "\n"


def write_json(path: Path, document: BaseModel) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dumps(document.model_dump(mode="json")), encoding="utf-8")
    return path


def read_json(path: Path, model: Type[Model]) -> Model:
    """
    Load and validate a versioned JSON document.

    Raises:
        ParseError: unreadable JSON or schema violation
        VersionMismatch: format_version other than the supported one
    """
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"Invalid JSON: {exc.msg}", path=str(path), line=exc.lineno) from exc
    if not isinstance(data, dict):
        raise ParseError("Expected a JSON object", path=str(path), line=1)

    version = data.get("format_version")
    if version != FORMAT_VERSION:
        raise VersionMismatch(
            "Unsupported format_version",
            path=str(path),
            found=version,
            supported=FORMAT_VERSION,
        )
    try:
        return model.model_validate(data)
    except ValidationError as exc:
        first = exc.errors()[0]
        field = ".".join(str(part) for part in first["loc"])
        raise ParseError(first["msg"], path=str(path), field=field) from exc


# =============================================================================
# Map
# =============================================================================

def map_primitive_schema(primitive: MapPrimitive, with_samples: bool = True) -> MapPrimitiveSchema:
    return MapPrimitiveSchema(
        index=primitive.index,
        normal=[float(v) for v in primitive.plane.normal],
        offset=float(primitive.plane.offset),
        boundary=primitive.boundary.tolist(),
        area=float(primitive.area),
        sample_points=primitive.sample_points.tolist() if with_samples and len(primitive.sample_points) else None,
    )


def save_map(path: Path, primitives: Sequence[MapPrimitive]) -> Path:
    return write_json(path, MapFile(primitives=[map_primitive_schema(p) for p in primitives]))


def load_map(path: Path) -> list[MapPrimitive]:
    """Map primitives in file order; indices must equal positions."""
    document = read_json(path, MapFile)
    primitives = []
    for position, entry in enumerate(document.primitives):
        if entry.index != position:
            raise ParseError(
                f"Primitive index {entry.index} at position {position}",
                path=str(path),
                field=f"primitives.{position}.index",
            )
        primitives.append(
            MapPrimitive(
                plane=Plane(np.array(entry.normal), entry.offset),
                boundary=np.array(entry.boundary),
                area=entry.area,
                index=entry.index,
                sample_points=np.array(entry.sample_points) if entry.sample_points else np.zeros((0, 3)),
            )
        )
    return primitives


# =============================================================================
# Depth (DPTH: 16-byte header, little-endian float32 grid)
# =============================================================================

def save_depth(path: Path, depth: DepthMap, invalid: float = INVALID_DEPTH) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    stored = depth.with_sentinel(invalid)
    header = DEPTH_HEADER.pack(DEPTH_MAGIC, depth.width, depth.height, invalid)
    path.write_bytes(header + stored.values.astype("<f4").tobytes())
    return path


def load_depth(path: Path) -> DepthMap:
    """
    Read a DPTH file; invalid pixels come back as the in-memory sentinel.

    Raises:
        ParseError: bad magic, truncated or oversized payload
    """
    path = Path(path)
    raw = path.read_bytes()
    if len(raw) < DEPTH_HEADER.size:
        raise ParseError("Depth file shorter than its header", path=str(path), field="header")
    magic, width, height, invalid = DEPTH_HEADER.unpack_from(raw)
    if magic != DEPTH_MAGIC:
        raise ParseError("Not a DPTH file", path=str(path), field="magic")
    expected = DEPTH_HEADER.size + 4 * width * height
    if len(raw) != expected:
        raise ParseError(
            f"Depth payload has {len(raw) - DEPTH_HEADER.size} bytes, expected {expected - DEPTH_HEADER.size}",
            path=str(path),
            field="data",
        )
    values = np.frombuffer(raw, dtype="<f4", offset=DEPTH_HEADER.size).reshape(height, width)
    return DepthMap(values.astype(float), invalid=float(invalid)).with_sentinel(INVALID_DEPTH)


# =============================================================================
# Poses, embeddings, weights
# =============================================================================

def save_pose(path: Path, pose: Pose) -> Path:
    return write_json(path, PoseFile(pose=pose.to_list()))


def load_pose(path: Path) -> Pose:
    return Pose.from_list(read_json(path, PoseFile).pose)


def save_embeddings(path: Path, query_embs: np.ndarray, map_embs: np.ndarray) -> Path:
    return write_json(path, EmbeddingsFile(query=np.asarray(query_embs).tolist(), map=np.asarray(map_embs).tolist()))


def load_embeddings(path: Path) -> tuple[np.ndarray, np.ndarray]:
    document = read_json(path, EmbeddingsFile)
    query_embs, map_embs = np.array(document.query, dtype=float), np.array(document.map, dtype=float)
    if query_embs.ndim != 2 or map_embs.ndim != 2 or query_embs.shape[1] != map_embs.shape[1]:
        raise ParseError("Embeddings must be two matrices of equal width", path=str(path), field="query")
    return query_embs, map_embs


def save_weights_payload(path: Path, payload: dict) -> Path:
    return write_json(path, WeightsFile.model_validate(payload))


def load_weights_payload(path: Path) -> dict:
    """Matcher weight payload (keys as written by PlaneMatcher.to_payload)."""
    return read_json(path, WeightsFile).model_dump(exclude={"format_version"})


# =============================================================================
# Rasters and reports
# =============================================================================

def save_pgm(path: Path, raster: np.ndarray) -> Path:
    """Binary PGM (P5); 8-bit when values fit, else 16-bit big-endian."""
    raster = np.asarray(raster)
    if raster.min(initial=0) < 0:
        raise ValueError("PGM rasters hold nonnegative values")
    maxval = 255 if raster.max(initial=0) <= 255 else 65535
    dtype = "u1" if maxval == 255 else ">u2"
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    header = f"P5\n{raster.shape[1]} {raster.shape[0]}\n{maxval}\n".encode("ascii")
    path.write_bytes(header + raster.astype(dtype).tobytes())
    return path


def load_pgm(path: Path) -> np.ndarray:
    path = Path(path)
    raw = path.read_bytes()
    match = _PGM_HEADER.match(raw)
    if not match:
        raise ParseError("Not a binary PGM", path=str(path), field="header")
    width, height, maxval = (int(g) for g in match.groups())
    dtype = "u1" if maxval < 256 else ">u2"
    size = width * height * np.dtype(dtype).itemsize
    if len(raw) - match.end() != size:
        raise ParseError("PGM payload size does not match its header", path=str(path), field="data")
    return np.frombuffer(raw, dtype=dtype, offset=match.end()).reshape(height, width).astype(int)


def format_float(value: float) -> str:
    return f"{value:.{settings.output_float_digits}g}"


def write_csv(path: Path, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> Path:
    """CSV with floats at the configured significant digits."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([format_float(v) if isinstance(v, float) else v for v in row])
    return path
