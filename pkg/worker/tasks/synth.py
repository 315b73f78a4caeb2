"""
Synth Task Processor

Generates a synthetic planar scene from a SceneSpec and writes it as a scene
directory (map, manifest, per-query records).
"""
from pathlib import Path

import structlog

from config.experiment import SceneSpec
from schemas.scene import ManifestFile
from simulation.scene import synth_scene
from simulation.scene_io import save_scene

logger = structlog.get_logger()


def process_synth_job(spec: SceneSpec, out_dir: Path) -> ManifestFile:
    """
    Synthesize a scene and write it to `out_dir`.

    Args:
        spec: scene description (seeded)
        out_dir: target scene directory, created when missing

    Returns:
        The manifest written to `<out_dir>/manifest.json`
    """
    logger.info("Processing synth job", out=str(out_dir), cameras=spec.cameras, seed=spec.rng_seed)
    map_primitives, queries = synth_scene(spec)
    return save_scene(Path(out_dir), spec, map_primitives, queries)
