"""
Fit-Planes Task Processor

Runs plane extraction alone on one depth map and writes the primitives together
with an index raster (PGM) for inspection.
"""
from pathlib import Path

import structlog

from config.experiment import RansacConfig
from rooms.extraction.room import extract_query_primitives
from schemas.results import PrimitivesFile
from schemas.scene import IntrinsicsSchema, QueryPrimitiveSchema
from services.errors import DimensionMismatch
from services.geometry import Intrinsics
from services.storage import load_depth, save_pgm, write_json
from simulation.scene_io import index_raster

logger = structlog.get_logger()

PRIMITIVES_FILE = "primitives.json"


def process_fit_planes_job(depth_path: Path, K: Intrinsics, cfg: RansacConfig, out_dir: Path) -> PrimitivesFile:
    """
    Extract planar primitives from a DPTH file.

    Raises:
        NoPlaneFound: no plane reached consensus
        DimensionMismatch: depth size differs from the intrinsics
        ParseError: malformed depth file
    """
    depth = load_depth(depth_path)
    if depth.values.shape != (K.height, K.width):
        raise DimensionMismatch(
            "Depth map size disagrees with the intrinsics",
            depth=[depth.width, depth.height],
            intrinsics=[K.width, K.height],
        )
    primitives = extract_query_primitives(depth, K, cfg)

    out_dir = Path(out_dir)
    document = PrimitivesFile(
        intrinsics=IntrinsicsSchema(**K.to_dict()),
        primitives=[
            QueryPrimitiveSchema(
                index=p.index,
                normal=[float(v) for v in p.plane.normal],
                offset=float(p.plane.offset),
                area=p.area,
            )
            for p in primitives
        ],
    )
    save_pgm(out_dir / document.masks_file, index_raster(primitives, depth.height, depth.width))
    write_json(out_dir / PRIMITIVES_FILE, document)
    logger.info("Planes fitted", depth=str(depth_path), primitives=len(primitives), out=str(out_dir))
    return document
