"""
Assignment matrices and correspondence extraction.

A_ij = σ_i^q σ_j^m · softmax over queries (column) · softmax over map (row) of S.
Hard correspondences are mutual strict maxima scoring above τ.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Union

import numpy as np
import structlog
import torch

from services.errors import ShapeMismatch

logger = structlog.get_logger()

ArrayLike = Union[np.ndarray, torch.Tensor]


class Correspondence(NamedTuple):
    """A predicted plane match: (query index, map index, score)."""
    query_index: int
    map_index: int
    score: float

    def to_dict(self) -> dict:
        return {"query_idx": self.query_index, "map_idx": self.map_index, "score": self.score}


@dataclass(eq=False)
class AssignmentMatrix:
    """Soft Nq×Nm scores with per-side matchability."""
    scores: torch.Tensor
    sigma_q: torch.Tensor
    sigma_m: torch.Tensor

    @property
    def shape(self) -> tuple[int, int]:
        return tuple(self.scores.shape)

    def numpy(self) -> np.ndarray:
        return self.scores.detach().cpu().numpy()


def _as_tensor(value: ArrayLike) -> torch.Tensor:
    if isinstance(value, torch.Tensor):
        return value.to(torch.float64)
    return torch.as_tensor(np.asarray(value, dtype=float), dtype=torch.float64)


def assignment_matrix(S: ArrayLike, sigma_q: ArrayLike, sigma_m: ArrayLike) -> AssignmentMatrix:
    """Combine similarities with matchabilities (differentiable in every input)."""
    S, sigma_q, sigma_m = _as_tensor(S), _as_tensor(sigma_q), _as_tensor(sigma_m)
    if S.ndim != 2 or S.shape != (len(sigma_q), len(sigma_m)):
        raise ShapeMismatch(
            "Similarity and matchability shapes disagree",
            similarity=list(S.shape),
            sigma_q=len(sigma_q),
            sigma_m=len(sigma_m),
        )
    scores = (
        sigma_q[:, None]
        * sigma_m[None, :]
        * torch.softmax(S, dim=0)
        * torch.softmax(S, dim=1)
    )
    return AssignmentMatrix(scores=scores, sigma_q=sigma_q, sigma_m=sigma_m)


def raw_similarity_assignment(query_embs: ArrayLike, map_embs: ArrayLike) -> AssignmentMatrix:
    """Assignment from unprojected embeddings: S = f^q·f^m, σ ≡ 1."""
    fq, fm = _as_tensor(query_embs), _as_tensor(map_embs)
    if fq.ndim != 2 or fm.ndim != 2 or fq.shape[1] != fm.shape[1]:
        raise ShapeMismatch(
            "Embedding shapes disagree", query=list(fq.shape), map=list(fm.shape)
        )
    S = fq @ fm.T
    return assignment_matrix(S, torch.ones(len(fq), dtype=torch.float64), torch.ones(len(fm), dtype=torch.float64))


def extract_correspondences(A: Union[AssignmentMatrix, np.ndarray], tau: float) -> list[Correspondence]:
    """
    Mutual-nearest-neighbour pairs with A_ij > τ.

    A pair qualifies only when A_ij is the strict maximum of both its row and its
    column, so exact ties yield nothing and the result is one-to-one.
    """
    scores = A.numpy() if isinstance(A, AssignmentMatrix) else np.asarray(A, dtype=float)
    if scores.size == 0:
        return []
    row_max = scores.max(axis=1)
    col_max = scores.max(axis=0)
    row_unique = (scores == row_max[:, None]).sum(axis=1) == 1
    col_unique = (scores == col_max[None, :]).sum(axis=0) == 1
    row_arg = scores.argmax(axis=1)
    col_arg = scores.argmax(axis=0)

    matches = []
    for i, j in enumerate(row_arg):
        if row_unique[i] and col_unique[j] and col_arg[j] == i and scores[i, j] > tau:
            matches.append(Correspondence(int(i), int(j), float(scores[i, j])))
    return matches
