"""Negative log-likelihood matching loss with per-layer supervision."""
from typing import Sequence

import torch

from rooms.matching.tools.assignment import AssignmentMatrix
from rooms.matching.tools.labels import MatchLabels

LOG_FLOOR = 1e-12


def _mean_log(values: torch.Tensor) -> torch.Tensor:
    return torch.log(torch.clamp(values, min=LOG_FLOOR)).mean()


def layer_loss(assignment: AssignmentMatrix, labels: MatchLabels) -> torch.Tensor:
    """
    −(mean log A over M* + ½ mean log(1 − σ^q) over U^q + ½ mean log(1 − σ^m) over U^m).

    Empty label sets contribute nothing.
    """
    loss = torch.zeros((), dtype=assignment.scores.dtype)
    if labels.matches:
        rows = torch.tensor([i for i, _ in labels.matches])
        cols = torch.tensor([j for _, j in labels.matches])
        loss = loss - _mean_log(assignment.scores[rows, cols])
    if labels.unmatched_query:
        idx = torch.tensor(labels.unmatched_query)
        loss = loss - 0.5 * _mean_log(1.0 - assignment.sigma_q[idx])
    if labels.unmatched_map:
        idx = torch.tensor(labels.unmatched_map)
        loss = loss - 0.5 * _mean_log(1.0 - assignment.sigma_m[idx])
    return loss


def matching_loss(assignments: Sequence[AssignmentMatrix], labels: MatchLabels) -> torch.Tensor:
    """Sum of the per-layer losses."""
    return sum((layer_loss(a, labels) for a in assignments), torch.zeros((), dtype=torch.float64))
