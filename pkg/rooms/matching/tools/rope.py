"""
Rotary positional embedding driven by plane normals.

The embedding space is split into 2-D subspaces; subspace k is rotated by the
angle θ_k = b_k·n, where b_k ∈ R³ is a basis vector and n the plane normal.
Because angles are linear in n, rotating queries by their own normals and keys by
theirs yields the score q⊤ RoPE(n_j − n_i) k.
"""
from typing import Union

import numpy as np
import torch

ArrayLike = Union[np.ndarray, torch.Tensor]


def _as_tensor(value: ArrayLike) -> torch.Tensor:
    if isinstance(value, torch.Tensor):
        return value.to(torch.float64)
    return torch.as_tensor(np.asarray(value, dtype=float), dtype=torch.float64)


def rope_angles(basis: ArrayLike, normals: ArrayLike) -> torch.Tensor:
    """θ = n · b_k for every normal (..., 3) and basis vector (K, 3) → (..., K)."""
    return _as_tensor(normals) @ _as_tensor(basis).T


def rope_matrix(basis: ArrayLike, normal: ArrayLike) -> torch.Tensor:
    """Dense 2K×2K block-diagonal rotation for one normal."""
    angles = rope_angles(basis, _as_tensor(normal).reshape(3))
    cos, sin = torch.cos(angles), torch.sin(angles)
    blocks = [torch.stack([torch.stack([c, -s]), torch.stack([s, c])]) for c, s in zip(cos, sin)]
    return torch.block_diag(*blocks)


def apply_rope(x: torch.Tensor, angles: torch.Tensor) -> torch.Tensor:
    """
    Rotate consecutive pairs of the last axis of `x` (..., 2K) by `angles` (..., K).

    Equivalent to rope_matrix(basis, n) @ x without building the matrix.
    """
    x_even, x_odd = x[..., 0::2], x[..., 1::2]
    cos, sin = torch.cos(angles), torch.sin(angles)
    rotated = torch.stack([x_even * cos - x_odd * sin, x_even * sin + x_odd * cos], dim=-1)
    return rotated.flatten(-2)


def attention_score(
    q: ArrayLike,
    k: ArrayLike,
    n_i: ArrayLike,
    n_j: ArrayLike,
    basis: ArrayLike,
) -> torch.Tensor:
    """Retrofitted self-attention score q⊤ RoPE(n_j − n_i) k."""
    relative = _as_tensor(n_j).reshape(3) - _as_tensor(n_i).reshape(3)
    return _as_tensor(q) @ rope_matrix(basis, relative) @ _as_tensor(k)
