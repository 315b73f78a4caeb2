"""
planeloc - plane-based camera relocalization command line

Subcommands:
- synth:       generate a synthetic planar scene directory from a SceneSpec JSON
- fit-planes:  sequential RANSAC on one depth map, primitives JSON + PGM mask raster
- relocalize:  full pipeline over a scene directory, per-query poses + metrics
- evaluate:    pose and plane-matching metrics from estimate/ground-truth files

Usage:
    planeloc synth spec.json --out scenes/room0
    planeloc relocalize scenes/room0 --synthetic-embeddings --refine --out runs/r0
    planeloc evaluate runs/r0/estimates.json runs/r0/ground_truth.json --out runs/r0/eval

Exit codes:
    0 success, 2 configuration error, 3 algorithmic degeneracy with no fallback,
    4 I/O error

Environment variables:
    PLANELOC_LOG_LEVEL, PLANELOC_ENVIRONMENT, PLANELOC_DEFAULT_SEED,
    PLANELOC_DEFAULT_THREADS
"""
import argparse
import json
import sys
from pathlib import Path
from typing import Any, Callable, Optional, Sequence, Type, TypeVar

import structlog
from pydantic import BaseModel, ValidationError

from config import settings
from config.experiment import EvaluationConfig, ExperimentConfig, RansacConfig, SceneSpec
from config.logging import configure_logging
from schemas.scene import IntrinsicsSchema
from services.errors import (
    DimensionMismatch,
    LengthMismatch,
    NoPlaneFound,
    ParseError,
    PlaneLocError,
    SamplingExhausted,
    ShapeMismatch,
    VersionMismatch,
)
from services.geometry import Intrinsics
from services.storage import dumps

logger = structlog.get_logger()

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DEGENERATE = 3
EXIT_IO = 4

Model = TypeVar("Model", bound=BaseModel)

# Subcommand to handler mapping
COMMANDS: dict[str, Callable[[argparse.Namespace], int]] = {}


class ConfigError(Exception):
    """Unreadable or invalid configuration."""


def register_command(name: str):
    """Decorator to register a handler for a subcommand."""
    def decorator(func: Callable[[argparse.Namespace], int]):
        COMMANDS[name] = func
        return func
    return decorator


def load_config(path: Optional[Path], model: Type[Model], overrides: Optional[dict] = None, **defaults: Any) -> Model:
    """
    Build a config model from an optional JSON file plus command-line overrides.

    Precedence: overrides > file > defaults.

    Raises:
        ConfigError: unreadable file, invalid JSON or failed validation
    """
    data: dict = dict(defaults)
    if path is not None:
        try:
            loaded = json.loads(Path(path).read_text(encoding="utf-8"))
        except OSError as exc:
            raise ConfigError(f"Cannot read config {path}: {exc.strerror}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"Invalid JSON in {path} at line {exc.lineno}: {exc.msg}") from exc
        if not isinstance(loaded, dict):
            raise ConfigError(f"Config {path} must hold a JSON object")
        data.update(loaded)
    data.update({k: v for k, v in (overrides or {}).items() if v is not None})
    try:
        return model.model_validate(data)
    except ValidationError as exc:
        first = exc.errors()[0]
        location = ".".join(str(part) for part in first["loc"]) or model.__name__
        raise ConfigError(f"{location}: {first['msg']}") from exc


def _emit(payload: dict) -> None:
    sys.stdout.write(dumps(payload))
    sys.stdout.flush()


# =============================================================================
# Commands
# =============================================================================

@register_command("synth")
def cmd_synth(args: argparse.Namespace) -> int:
    from worker.tasks.synth import process_synth_job

    spec = load_config(args.spec, SceneSpec, {"rng_seed": args.seed})
    manifest = process_synth_job(spec, Path(args.out))
    _emit(manifest.model_dump(mode="json"))
    return EXIT_OK


@register_command("fit-planes")
def cmd_fit_planes(args: argparse.Namespace) -> int:
    from worker.tasks.fit_planes import process_fit_planes_job

    cfg = load_config(args.config, RansacConfig, {"rng_seed": args.seed})
    intrinsics = load_config(args.intrinsics, IntrinsicsSchema)
    document = process_fit_planes_job(
        Path(args.depth), Intrinsics(**intrinsics.model_dump()), cfg, Path(args.out)
    )
    _emit(document.model_dump(mode="json"))
    return EXIT_OK


@register_command("relocalize")
def cmd_relocalize(args: argparse.Namespace) -> int:
    from worker.tasks.relocalize import process_relocalize_job

    overrides = {
        "scene_dir": args.scene_dir,
        "weights": args.weights,
        "seed": args.seed,
        "threads": args.threads,
        "output_dir": args.out,
        "refine": True if args.refine else None,
        "synthetic_embeddings": True if args.synthetic_embeddings else None,
        "oracle_labels": True if args.oracle_labels else None,
    }
    cfg = load_config(
        args.config,
        ExperimentConfig,
        overrides,
        seed=settings.default_seed,
        threads=settings.default_threads,
    )
    report = process_relocalize_job(cfg)
    _emit({
        "pose": report.pose.to_dict(),
        "matching": report.matching.to_dict() if report.matching is not None else None,
        "failed_queries": report.failed_queries,
    })
    return EXIT_OK


@register_command("evaluate")
def cmd_evaluate(args: argparse.Namespace) -> int:
    from worker.tasks.evaluate import process_evaluate_job

    cfg = load_config(args.config, EvaluationConfig)
    report = process_evaluate_job(
        Path(args.estimates),
        Path(args.ground_truth),
        cfg,
        Path(args.out),
        matches_path=Path(args.matches) if args.matches else None,
    )
    _emit({
        "pose": report.pose.to_dict(),
        "matching": report.matching.to_dict() if report.matching is not None else None,
    })
    return EXIT_OK


# =============================================================================
# Argument parsing and dispatch
# =============================================================================

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="planeloc", description="Plane-based camera relocalization")
    commands = parser.add_subparsers(dest="command", required=True)

    synth = commands.add_parser("synth", help="Generate a synthetic planar scene")
    synth.add_argument("spec", nargs="?", type=Path, help="SceneSpec JSON (defaults apply when omitted)")
    synth.add_argument("--seed", type=int, default=None, help="Overrides the scene spec's rng_seed")
    synth.add_argument("--out", type=Path, required=True, help="Scene directory to write")

    fit = commands.add_parser("fit-planes", help="Extract planar primitives from one depth map")
    fit.add_argument("depth", type=Path, help="DPTH depth file")
    fit.add_argument("intrinsics", type=Path, help="Intrinsics JSON (fx, fy, cx, cy, width, height)")
    fit.add_argument("--config", type=Path, default=None, help="RansacConfig JSON")
    fit.add_argument("--seed", type=int, default=None, help="Overrides the RANSAC rng_seed")
    fit.add_argument("--out", type=Path, required=True, help="Output directory")

    reloc = commands.add_parser("relocalize", help="Relocalize every query of a scene directory")
    reloc.add_argument("scene_dir", nargs="?", type=Path, default=None, help="Scene directory (or scene_dir in --config)")
    reloc.add_argument("--config", type=Path, default=None, help="ExperimentConfig JSON")
    reloc.add_argument("--weights", type=Path, default=None, help="Matcher weights JSON")
    reloc.add_argument("--seed", type=int, default=None)
    reloc.add_argument("--threads", type=int, default=None)
    reloc.add_argument("--refine", action="store_true", help="Run depth-alignment refinement")
    reloc.add_argument("--synthetic-embeddings", action="store_true", help="Plant embeddings from ground-truth labels")
    reloc.add_argument("--oracle-labels", action="store_true", help="Use ground-truth labels as matches")
    reloc.add_argument("--out", type=Path, default=None, help="Output directory")

    ev = commands.add_parser("evaluate", help="Score estimates against ground truth")
    ev.add_argument("estimates", type=Path, help="estimates.json")
    ev.add_argument("ground_truth", type=Path, help="ground_truth.json")
    ev.add_argument("--matches", type=Path, default=None, help="matches.json with predictions and labels")
    ev.add_argument("--config", type=Path, default=None, help="EvaluationConfig JSON (thresholds, iou_min)")
    ev.add_argument("--out", type=Path, required=True, help="Report directory")

    return parser


def run(argv: Optional[Sequence[str]] = None) -> int:
    """Parse arguments, dispatch, and map failures to exit codes."""
    args = build_parser().parse_args(argv)
    handler = COMMANDS[args.command]
    try:
        return handler(args)

    except ConfigError as e:
        logger.error("Configuration error", command=args.command, message=str(e))
        print(f"planeloc: configuration error: {e}", file=sys.stderr)
        return EXIT_CONFIG

    except (NoPlaneFound, SamplingExhausted) as e:
        logger.error("No result and no fallback", command=args.command, message=e.message, detail=e.detail)
        print(f"planeloc: {e.message}", file=sys.stderr)
        return EXIT_DEGENERATE

    except (ParseError, VersionMismatch, LengthMismatch, DimensionMismatch, ShapeMismatch) as e:
        logger.error("Input error", command=args.command, message=e.message, detail=e.detail)
        print(f"planeloc: {e.message}", file=sys.stderr)
        return EXIT_IO

    except OSError as e:
        logger.error("I/O error", command=args.command, message=str(e))
        print(f"planeloc: {e}", file=sys.stderr)
        return EXIT_IO

    except PlaneLocError as e:
        logger.error("Pipeline error", command=args.command, message=e.message, detail=e.detail)
        print(f"planeloc: {e.message}", file=sys.stderr)
        return EXIT_DEGENERATE


def main() -> None:
    """Entry point for the planeloc script."""
    configure_logging()
    sys.exit(run())


if __name__ == "__main__":
    main()
