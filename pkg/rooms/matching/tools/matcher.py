"""
Transformer plane matcher.

Each layer runs one self-attention unit per side (scores retrofitted with a
normal-driven RoPE) and one cross-attention unit between sides (plain dot
products), both pre-normalized with residual connections and a GELU feed-forward.
After every layer the shared similarity and matchability heads produce an
assignment matrix, so a loss can supervise all layers.

Weights come from a seeded Gaussian or from a JSON payload; nothing here trains.
"""
from __future__ import annotations

import math
from typing import Any, Optional

import numpy as np
import structlog
import torch
import torch.nn.functional as F
from torch import nn

from config.experiment import MatcherConfig
from services.errors import ParseError, ShapeMismatch
from rooms.matching.tools.assignment import AssignmentMatrix, assignment_matrix
from rooms.matching.tools.rope import apply_rope, rope_angles

logger = structlog.get_logger()

DTYPE = torch.float64


class AttentionUnit(nn.Module):
    """Pre-norm multi-head attention + feed-forward block with residuals."""

    def __init__(self, config: MatcherConfig, use_rope: bool):
        super().__init__()
        c = config.c
        self.heads = config.heads
        self.head_dim = config.head_dim
        self.use_rope = use_rope
        self.norm_attn = nn.LayerNorm(c, dtype=DTYPE)
        self.q_proj = nn.Linear(c, c, dtype=DTYPE)
        self.k_proj = nn.Linear(c, c, dtype=DTYPE)
        self.v_proj = nn.Linear(c, c, dtype=DTYPE)
        self.out_proj = nn.Linear(c, c, dtype=DTYPE)
        self.norm_ffn = nn.LayerNorm(c, dtype=DTYPE)
        self.ffn_in = nn.Linear(c, config.hidden, dtype=DTYPE)
        self.ffn_out = nn.Linear(config.hidden, c, dtype=DTYPE)
        if use_rope:
            # c/2 basis vectors, split evenly across heads
            self.rope_basis = nn.Parameter(torch.zeros(c // 2, 3, dtype=DTYPE))

    def _split(self, x: torch.Tensor) -> torch.Tensor:
        return x.reshape(x.shape[0], self.heads, self.head_dim).transpose(0, 1)

    def _rotate(self, x: torch.Tensor, normals: torch.Tensor) -> torch.Tensor:
        """Rotate per-head (heads, N, head_dim) features by their own normals."""
        per_head = self.head_dim // 2
        bases = self.rope_basis.reshape(self.heads, per_head, 3)
        angles = torch.stack([rope_angles(bases[h], normals) for h in range(self.heads)])
        return apply_rope(x, angles)

    def forward(
        self,
        x: torch.Tensor,
        source: Optional[torch.Tensor] = None,
        normals: Optional[torch.Tensor] = None,
    ) -> torch.Tensor:
        """
        Update `x` by attending to `source` (itself when None).

        Normals are required for self-attention with RoPE.
        """
        h = self.norm_attn(x)
        context = h if source is None else self.norm_attn(source)
        q = self._split(self.q_proj(h))
        k = self._split(self.k_proj(context))
        v = self._split(self.v_proj(context))
        if self.use_rope:
            q = self._rotate(q, normals)
            k = self._rotate(k, normals)

        weights = torch.softmax(q @ k.transpose(-1, -2) / math.sqrt(self.head_dim), dim=-1)
        merged = (weights @ v).transpose(0, 1).reshape(x.shape[0], -1)
        x = x + self.out_proj(merged)
        return x + self.ffn_out(F.gelu(self.ffn_in(self.norm_ffn(x))))


class MatcherLayer(nn.Module):
    """Self-attention on each side, then simultaneous cross-attention."""

    def __init__(self, config: MatcherConfig):
        super().__init__()
        self.self_attn = AttentionUnit(config, use_rope=True)
        self.cross_attn = AttentionUnit(config, use_rope=False)

    def forward(
        self,
        fq: torch.Tensor,
        nq: torch.Tensor,
        fm: torch.Tensor,
        nm: torch.Tensor,
    ) -> tuple[torch.Tensor, torch.Tensor]:
        fq = self.self_attn(fq, normals=nq)
        fm = self.self_attn(fm, normals=nm)
        return self.cross_attn(fq, source=fm), self.cross_attn(fm, source=fq)


class PlaneMatcher(nn.Module):
    """N matcher layers plus shared similarity/matchability heads."""

    def __init__(self, config: MatcherConfig):
        super().__init__()
        self.config = config
        self.layers = nn.ModuleList(MatcherLayer(config) for _ in range(config.n_layers))
        self.similarity_proj = nn.Linear(config.c, config.c, dtype=DTYPE)
        self.matchability_proj = nn.Linear(config.c, 1, dtype=DTYPE)

    # -------------------------------------------------------------------------
    # Construction
    # -------------------------------------------------------------------------

    @classmethod
    def from_seed(cls, config: MatcherConfig, seed: int = 0) -> "PlaneMatcher":
        """Gaussian weights (σ = 1/√c), zero biases, unit-Gaussian RoPE bases."""
        matcher = cls(config)
        generator = torch.Generator().manual_seed(seed)
        std = 1.0 / math.sqrt(config.c)
        with torch.no_grad():
            for name, param in matcher.named_parameters():
                if name.endswith("rope_basis"):
                    param.copy_(torch.randn(param.shape, generator=generator, dtype=DTYPE))
                elif ".norm_" in name or name.startswith("norm_"):
                    param.fill_(1.0 if name.endswith("weight") else 0.0)
                elif name.endswith("weight"):
                    param.copy_(torch.randn(param.shape, generator=generator, dtype=DTYPE) * std)
                else:
                    param.zero_()
        matcher.eval()
        logger.debug("Matcher initialized from seed", seed=seed, c=config.c, layers=config.n_layers)
        return matcher

    @classmethod
    def from_payload(cls, payload: dict[str, Any]) -> "PlaneMatcher":
        """Build from the weight-file payload (see `to_payload`)."""
        try:
            layers = payload["layers"]
            config = MatcherConfig(
                c=payload["c"],
                n_layers=payload["N"],
                heads=payload["heads"],
                ffn_hidden=payload.get("ffn_hidden"),
            )
        except KeyError as exc:
            raise ParseError("Weight payload is missing a field", field=str(exc.args[0])) from exc
        if len(layers) != config.n_layers or len(payload.get("rope_bases", [])) != config.n_layers:
            raise ShapeMismatch(
                "Weight payload layer count disagrees with N",
                n_layers=config.n_layers,
                layers=len(layers),
            )

        state: dict[str, torch.Tensor] = {}
        for k, (layer, basis) in enumerate(zip(layers, payload["rope_bases"])):
            for name, values in layer.items():
                state[f"layers.{k}.{name}"] = torch.as_tensor(values, dtype=DTYPE)
            state[f"layers.{k}.self_attn.rope_basis"] = torch.as_tensor(basis, dtype=DTYPE)
        for head in ("similarity_proj", "matchability_proj"):
            state[f"{head}.weight"] = torch.as_tensor(payload[head]["weight"], dtype=DTYPE)
            state[f"{head}.bias"] = torch.as_tensor(payload[head]["bias"], dtype=DTYPE)

        matcher = cls(config)
        expected = matcher.state_dict()
        for name, tensor in expected.items():
            if name not in state or state[name].shape != tensor.shape:
                raise ShapeMismatch(
                    "Weight payload tensor has the wrong shape",
                    tensor=name,
                    expected=list(tensor.shape),
                    got=list(state[name].shape) if name in state else None,
                )
        matcher.load_state_dict(state)
        matcher.eval()
        return matcher

    def to_payload(self) -> dict[str, Any]:
        state = self.state_dict()
        layers, bases = [], []
        for k in range(self.config.n_layers):
            prefix = f"layers.{k}."
            basis_key = f"{prefix}self_attn.rope_basis"
            bases.append(state[basis_key].tolist())
            layers.append({
                name[len(prefix):]: tensor.tolist()
                for name, tensor in state.items()
                if name.startswith(prefix) and name != basis_key
            })
        return {
            "c": self.config.c,
            "N": self.config.n_layers,
            "heads": self.config.heads,
            "ffn_hidden": self.config.hidden,
            "layers": layers,
            "rope_bases": bases,
            "similarity_proj": {
                "weight": state["similarity_proj.weight"].tolist(),
                "bias": state["similarity_proj.bias"].tolist(),
            },
            "matchability_proj": {
                "weight": state["matchability_proj.weight"].tolist(),
                "bias": state["matchability_proj.bias"].tolist(),
            },
        }

    # -------------------------------------------------------------------------
    # Heads and forward pass
    # -------------------------------------------------------------------------

    def similarity_and_matchability(
        self,
        query_embs: torch.Tensor,
        map_embs: torch.Tensor,
    ) -> tuple[torch.Tensor, torch.Tensor, torch.Tensor]:
        """S = Linear(f^q)·Linear(f^m) and σ = sigmoid(Linear(f)) per side."""
        pq = self.similarity_proj(query_embs)
        pm = self.similarity_proj(map_embs)
        S = pq @ pm.T
        sigma_q = torch.sigmoid(self.matchability_proj(query_embs)).squeeze(-1)
        sigma_m = torch.sigmoid(self.matchability_proj(map_embs)).squeeze(-1)
        return S, sigma_q, sigma_m

    def forward(
        self,
        query_embs: torch.Tensor,
        query_normals: torch.Tensor,
        map_embs: torch.Tensor,
        map_normals: torch.Tensor,
    ) -> tuple[torch.Tensor, torch.Tensor, list[AssignmentMatrix]]:
        fq, fm = query_embs, map_embs
        assignments = []
        for layer in self.layers:
            fq, fm = layer(fq, query_normals, fm, map_normals)
            assignments.append(assignment_matrix(*self.similarity_and_matchability(fq, fm)))
        return fq, fm, assignments


def _as_tensor(value: Any) -> torch.Tensor:
    if isinstance(value, torch.Tensor):
        return value.to(DTYPE)
    return torch.as_tensor(np.asarray(value, dtype=float), dtype=DTYPE)


def matcher_forward(
    query_embs: Any,
    query_normals: Any,
    map_embs: Any,
    map_normals: Any,
    matcher: PlaneMatcher,
) -> tuple[torch.Tensor, torch.Tensor, list[AssignmentMatrix]]:
    """
    Run the matcher on one query/map pair.

    Returns:
        (refined query embeddings, refined map embeddings, per-layer assignments)

    Raises:
        ShapeMismatch: empty sides or inconsistent dimensions
    """
    fq, nq = _as_tensor(query_embs), _as_tensor(query_normals)
    fm, nm = _as_tensor(map_embs), _as_tensor(map_normals)
    c = matcher.config.c
    problems = []
    if fq.ndim != 2 or fq.shape[0] < 1 or fq.shape[1] != c:
        problems.append(f"query embeddings {list(fq.shape)}")
    if fm.ndim != 2 or fm.shape[0] < 1 or fm.shape[1] != c:
        problems.append(f"map embeddings {list(fm.shape)}")
    if nq.shape != (fq.shape[0], 3):
        problems.append(f"query normals {list(nq.shape)}")
    if nm.shape != (fm.shape[0], 3):
        problems.append(f"map normals {list(nm.shape)}")
    if problems:
        raise ShapeMismatch("Matcher inputs have inconsistent shapes", c=c, problems=problems)
    return matcher(fq, nq, fm, nm)
