"""
Synthetic plane embeddings with a planted correspondence structure.

Every map primitive owns a Gaussian anchor. A matched query primitive is its map
partner's anchor plus N(0, 1)/separation noise per dimension (the map side gets
its own noise draw), so large separations make matched pairs nearly identical
while unmatchable primitives stay independent draws.
"""
from __future__ import annotations

from typing import TYPE_CHECKING

import numpy as np

if TYPE_CHECKING:
    from rooms.matching.tools.labels import MatchLabels


def synth_embeddings(
    labels: MatchLabels,
    c: int,
    separation: float,
    seed: int,
) -> tuple[np.ndarray, np.ndarray]:
    """
    Query and map embeddings consistent with `labels`.

    Args:
        labels: ground-truth pairs and unmatchable sets
        c: embedding dimension
        separation: inverse noise magnitude; np.inf gives identical matched vectors
        seed: generator seed

    Returns:
        (query embeddings (Nq, c), map embeddings (Nm, c))
    """
    if not separation > 0:
        raise ValueError("separation must be positive")
    rng = np.random.default_rng(seed)
    noise = 0.0 if np.isinf(separation) else 1.0 / separation

    anchors = rng.standard_normal((labels.map_count, c))
    map_embs = anchors + noise * rng.standard_normal((labels.map_count, c))
    query_embs = rng.standard_normal((labels.query_count, c))
    for i, j in labels.matches:
        query_embs[i] = anchors[j] + noise * rng.standard_normal(c)
    return query_embs, map_embs
