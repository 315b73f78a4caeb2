from .settings import settings, get_settings, Settings
from .logging import configure_logging
from .experiment import (
    RansacConfig,
    SolverConfig,
    RefineConfig,
    MatcherConfig,
    MatchingConfig,
    RecallThreshold,
    DEFAULT_RECALL_THRESHOLDS,
    NoiseModel,
    SceneSpec,
    ExperimentConfig,
    EvaluationConfig,
)

__all__ = [
    "settings",
    "get_settings",
    "Settings",
    "configure_logging",
    "RansacConfig",
    "SolverConfig",
    "RefineConfig",
    "MatcherConfig",
    "MatchingConfig",
    "RecallThreshold",
    "DEFAULT_RECALL_THRESHOLDS",
    "NoiseModel",
    "SceneSpec",
    "ExperimentConfig",
    "EvaluationConfig",
]
