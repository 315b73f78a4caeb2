"""
Pydantic configuration models for every pipeline stage and for whole experiments.

Field constraints encode the invariants of each config; invalid values raise
pydantic.ValidationError, which the CLI reports as a configuration error.
"""
from pathlib import Path
from typing import Optional

from pydantic import (
    BaseModel,
    ConfigDict,
    DirectoryPath,
    Field,
    FilePath,
    field_validator,
    model_validator,
)


class RansacConfig(BaseModel):
    """Sequential RANSAC plane extraction settings."""
    model_config = ConfigDict(extra="forbid", frozen=True)

    distance_threshold: float = Field(default=0.10, gt=0, description="Meters")
    normal_dot_threshold: float = Field(default=0.9, gt=0, le=1)
    max_primitives: int = Field(default=16, ge=1)
    min_inlier_fraction: float = Field(default=0.01, gt=0, lt=1)
    hypotheses_per_plane: int = Field(default=512, ge=1)
    rng_seed: int = 0
    downsample: int = Field(default=1, ge=1, description="Integer stride applied to depth + intrinsics")
    normal_radius: int = Field(default=2, ge=1, description="Pixels between tangent samples")
    min_area: float = Field(default=0.01, gt=0, description="Square meters, map side only")
    sample_count: int = Field(default=1024, ge=1, description="Points sampled per map primitive")


class SolverConfig(BaseModel):
    """Pose estimation from plane correspondences."""
    model_config = ConfigDict(extra="forbid", frozen=True)

    ransac_iterations: int = Field(default=1024, ge=1)
    inlier_angle_threshold: float = Field(default=5.0, gt=0, description="Degrees")
    min_normal_separation: float = Field(default=5.0, gt=0, lt=90, description="Degrees")
    rng_seed: int = 0
    use_ransac: bool = True
    estimate_scale: bool = True


class RefineConfig(BaseModel):
    """Primitive-based pose refinement (Adam over twist and log offset seeds)."""
    model_config = ConfigDict(extra="forbid", frozen=True)

    iterations: int = Field(default=200, ge=1)
    lr_pose: float = Field(default=1e-3, gt=0)
    lr_offsets: float = Field(default=1e-4, gt=0)
    beta1: float = Field(default=0.9, gt=0, lt=1)
    beta2: float = Field(default=0.999, gt=0, lt=1)
    eps: float = Field(default=1e-8, gt=0)
    pixel_sample_count: int = Field(default=4096, ge=1)
    rng_seed: int = 0


class MatcherConfig(BaseModel):
    """Transformer matcher architecture."""
    model_config = ConfigDict(extra="forbid", frozen=True)

    c: int = Field(default=384, ge=8)
    n_layers: int = Field(default=4, ge=1)
    heads: int = Field(default=4, ge=1)
    ffn_hidden: Optional[int] = Field(default=None, ge=1, description="Defaults to 2c")

    @field_validator("c")
    @classmethod
    def _even(cls, value: int) -> int:
        if value % 2:
            raise ValueError("embedding dimension c must be even")
        return value

    @property
    def head_dim(self) -> int:
        return self.c // self.heads

    @property
    def hidden(self) -> int:
        return self.ffn_hidden or 2 * self.c

    @model_validator(mode="after")
    def _head_split(self) -> "MatcherConfig":
        if self.c % self.heads or (self.c // self.heads) % 2:
            raise ValueError("c must split into heads of even width")
        return self


class MatchingConfig(BaseModel):
    """Correspondence extraction and label generation thresholds."""
    model_config = ConfigDict(extra="forbid", frozen=True)

    tau: float = Field(default=0.2, ge=0, lt=1, description="Assignment confidence threshold")
    tau_star: float = Field(default=0.3, gt=0, le=1, description="Label IoU threshold")
    iou_min: float = Field(default=0.3, gt=0, le=1, description="True-positive IoU for match metrics")
    embedding_dim: int = Field(default=384, ge=2)
    separation: float = Field(default=10.0, gt=0)


class RecallThreshold(BaseModel):
    """One (meters, degrees) recall threshold pair."""
    model_config = ConfigDict(extra="forbid", frozen=True)

    meters: float = Field(gt=0)
    degrees: float = Field(gt=0)


DEFAULT_RECALL_THRESHOLDS = (
    RecallThreshold(meters=0.05, degrees=5.0),
    RecallThreshold(meters=0.10, degrees=10.0),
    RecallThreshold(meters=0.25, degrees=20.0),
)


class NoiseModel(BaseModel):
    """Sensor/monocular error emulation for synthetic queries."""
    model_config = ConfigDict(extra="forbid", frozen=True)

    depth_sigma: float = Field(default=0.0, ge=0, description="Meters")
    scale_range: tuple[float, float] = (1.0, 1.0)

    @field_validator("scale_range")
    @classmethod
    def _positive_range(cls, value: tuple[float, float]) -> tuple[float, float]:
        low, high = value
        if low <= 0 or high < low:
            raise ValueError("scale_range must satisfy 0 < low <= high")
        return value


class SceneSpec(BaseModel):
    """Synthetic planar room + camera set description."""
    model_config = ConfigDict(extra="forbid", frozen=True)

    extents: tuple[float, float, float] = (6.0, 5.0, 3.0)
    interior_primitives: int = Field(default=6, ge=0)
    primitive_size: tuple[float, float] = (0.4, 1.2)
    max_tilt_deg: float = Field(default=20.0, ge=0, lt=60)
    cameras: int = Field(default=10, ge=1)
    min_visible: int = Field(default=3, ge=1)
    min_visible_pixels: int = Field(default=200, ge=1)
    image_size: tuple[int, int] = (160, 120)
    focal_length: float = Field(default=140.0, gt=0, description="Pixels, fx = fy")
    max_rejections: int = Field(default=2000, ge=1)
    noise: NoiseModel = Field(default_factory=NoiseModel)
    tau_star: float = Field(default=0.5, gt=0, le=1)
    rng_seed: int = 0

    @field_validator("extents")
    @classmethod
    def _positive_extents(cls, value: tuple[float, float, float]) -> tuple[float, float, float]:
        if min(value) <= 0:
            raise ValueError("room extents must be positive")
        return value

    @field_validator("primitive_size")
    @classmethod
    def _size_range(cls, value: tuple[float, float]) -> tuple[float, float]:
        if value[0] <= 0 or value[1] < value[0]:
            raise ValueError("primitive_size must satisfy 0 < low <= high")
        return value


class ExperimentConfig(BaseModel):
    """Everything a reproducible relocalization run needs."""
    model_config = ConfigDict(extra="forbid")

    scene_dir: DirectoryPath
    weights: Optional[FilePath] = None
    embeddings_dir: Optional[DirectoryPath] = Field(
        default=None, description="Per-query embedding files; defaults to <scene_dir>/embeddings"
    )
    output_dir: Path = Path("out")
    seed: int = 0
    threads: int = Field(default=1, ge=1)
    query_limit: Optional[int] = Field(default=None, ge=1)
    refine: bool = False
    synthetic_embeddings: bool = False
    oracle_labels: bool = False
    ransac: RansacConfig = Field(default_factory=RansacConfig)
    solver: SolverConfig = Field(default_factory=SolverConfig)
    refinement: RefineConfig = Field(default_factory=RefineConfig)
    matching: MatchingConfig = Field(default_factory=MatchingConfig)
    thresholds: tuple[RecallThreshold, ...] = DEFAULT_RECALL_THRESHOLDS
    clamp_margin: float = Field(default=0.5, ge=0)

    @model_validator(mode="after")
    def _matcher_inputs(self) -> "ExperimentConfig":
        if not (self.synthetic_embeddings or self.oracle_labels) and self.weights is None:
            raise ValueError("matcher weights are required unless synthetic embeddings or oracle labels are used")
        return self

    @property
    def embeddings_root(self) -> Path:
        return self.embeddings_dir or self.scene_dir / "embeddings"


class EvaluationConfig(BaseModel):
    """Thresholds used by `planeloc evaluate`."""
    model_config = ConfigDict(extra="ignore", frozen=True)

    thresholds: tuple[RecallThreshold, ...] = DEFAULT_RECALL_THRESHOLDS
    iou_min: float = Field(default=0.3, gt=0, le=1)
