"""
MatchingRoom - Stage 2 of the relocalization pipeline.

Produces putative plane correspondences between the extracted query primitives
and the map, in one of three modes:
- matcher: transformer forward pass on provider embeddings (supplied weights)
- raw similarity: dual-softmax of raw embedding products (no weights)
- oracle: ground-truth labels at the query's true pose
"""
from typing import Optional

import numpy as np
import structlog

from config.experiment import MatchingConfig
from rooms.base import BaseRoom, MATCHING_ROOM_CONFIG, QueryContext
from rooms.matching.tools.assignment import (
    AssignmentMatrix,
    Correspondence,
    extract_correspondences,
    raw_similarity_assignment,
)
from rooms.matching.tools.embeddings import EmbeddingProvider
from rooms.matching.tools.labels import generate_labels
from rooms.matching.tools.matcher import PlaneMatcher, matcher_forward
from services.primitives import MapPrimitive

logger = structlog.get_logger()


class MatchingRoom(BaseRoom):
    """
    Matching Room - putative correspondences.

    Input: QueryContext with query_primitives (and gt_pose for oracle/synthetic modes)
    Output: QueryContext with matches (list of Correspondence, map indices are
    positions in the map list)
    """

    config = MATCHING_ROOM_CONFIG

    def __init__(
        self,
        map_primitives: list[MapPrimitive],
        matching: MatchingConfig,
        provider: Optional[EmbeddingProvider] = None,
        matcher: Optional[PlaneMatcher] = None,
        oracle_labels: bool = False,
    ):
        super().__init__(map_primitives)
        if not oracle_labels and provider is None:
            raise ValueError("MatchingRoom needs an embedding provider unless oracle labels are used")
        self.matching = matching
        self.provider = provider
        self.matcher = matcher
        self.oracle_labels = oracle_labels
        self._map_normals = np.array([p.plane.normal for p in map_primitives]).reshape(-1, 3)

    def _oracle(self, context: QueryContext) -> list[Correspondence]:
        if context.gt_pose is None:
            raise ValueError(f"Query {context.query_index} has no ground-truth pose for oracle labels")
        context.labels = generate_labels(
            context.query_primitives,
            self.map_primitives,
            context.gt_pose,
            context.intrinsics,
            self.matching.tau_star,
        )
        scores = context.labels.ious or (1.0,) * len(context.labels.matches)
        return [Correspondence(i, j, float(s)) for (i, j), s in zip(context.labels.matches, scores)]

    def _assignment(self, context: QueryContext) -> AssignmentMatrix:
        query_embs, map_embs = self.provider.embeddings(context, self.map_primitives)
        if self.matcher is None:
            return raw_similarity_assignment(query_embs, map_embs)
        query_normals = np.array([p.plane.normal for p in context.query_primitives])
        _, _, assignments = matcher_forward(
            query_embs, query_normals, map_embs, self._map_normals, self.matcher
        )
        return assignments[-1]

    def process(self, context: QueryContext) -> QueryContext:
        if self.oracle_labels:
            context.matches = self._oracle(context)
        elif not self.map_primitives or not context.query_primitives:
            context.matches = []
        else:
            context.matches = extract_correspondences(self._assignment(context), self.matching.tau)
        logger.info(
            "Correspondences extracted",
            query=context.query_index,
            count=len(context.matches),
            mode="oracle" if self.oracle_labels else ("matcher" if self.matcher else "raw_similarity"),
        )
        return context
