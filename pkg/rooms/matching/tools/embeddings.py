"""
Embedding providers for the matcher.

The image and point-cloud encoders are outside this package; a provider hands the
matcher one c-dimensional vector per query primitive and per map primitive.
"""
from __future__ import annotations

from pathlib import Path
from typing import Protocol, Sequence

import numpy as np
import structlog

from config.experiment import MatchingConfig
from rooms.base import QueryContext
from rooms.matching.tools.labels import generate_labels
from services.errors import ShapeMismatch
from services.primitives import MapPrimitive
from services.storage import load_embeddings
from simulation.embeddings import synth_embeddings

logger = structlog.get_logger()


class EmbeddingProvider(Protocol):
    """Source of (query embeddings (Nq, c), map embeddings (Nm, c)) for one query."""

    def embeddings(
        self,
        context: QueryContext,
        map_primitives: Sequence[MapPrimitive],
    ) -> tuple[np.ndarray, np.ndarray]:
        ...


class SyntheticEmbeddingProvider:
    """
    Embeddings planted from ground-truth labels of the extracted primitives.

    Requires the query's ground-truth pose; labels are generated at that pose with
    τ* and stored on the context for evaluation.
    """

    def __init__(self, config: MatchingConfig):
        self.config = config

    def embeddings(
        self,
        context: QueryContext,
        map_primitives: Sequence[MapPrimitive],
    ) -> tuple[np.ndarray, np.ndarray]:
        if context.gt_pose is None:
            raise ValueError(f"Query {context.query_index} has no ground-truth pose for synthetic embeddings")
        if context.labels is None:
            context.labels = generate_labels(
                context.query_primitives,
                map_primitives,
                context.gt_pose,
                context.intrinsics,
                self.config.tau_star,
            )
        return synth_embeddings(
            context.labels,
            self.config.embedding_dim,
            self.config.separation,
            seed=context.child_seed(1),
        )


class FileEmbeddingProvider:
    """Embeddings read from `<root>/<query index:04d>/embeddings.json`."""

    def __init__(self, root: Path):
        self.root = Path(root)

    def embeddings(
        self,
        context: QueryContext,
        map_primitives: Sequence[MapPrimitive],
    ) -> tuple[np.ndarray, np.ndarray]:
        path = self.root / f"{context.query_index:04d}" / "embeddings.json"
        query_embs, map_embs = load_embeddings(path)
        expected = (len(context.query_primitives), len(map_primitives))
        if (len(query_embs), len(map_embs)) != expected:
            raise ShapeMismatch(
                "Embedding file does not cover the primitives",
                path=str(path),
                query=len(query_embs),
                map=len(map_embs),
                expected=list(expected),
            )
        logger.debug("Embeddings loaded", path=str(path), dim=int(query_embs.shape[1]))
        return query_embs, map_embs
