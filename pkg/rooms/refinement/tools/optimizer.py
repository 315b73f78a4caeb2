"""
Joint refinement of the relative transform and the offset seeds.

The map is rendered once at the initial pose P₀. Adam then updates a twist ξ
(re-centred to zero after every step, T_tr ← exp(ξ)·T_tr) and log δ, each with
its own learning rate, from the analytic gradient of the depth cost evaluated on
pixels redrawn every iteration uniformly over the union of masks. The returned
pose is P* = P₀ ∘ T_tr, or P₀ itself when the final state does not lower the
cost over the full pixel set.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
import structlog
import torch

from config.experiment import RefineConfig
from services.camera import DepthMap
from services.geometry import Intrinsics, Pose, compose, se3_exp
from services.primitives import MapPrimitive, QueryPrimitive
from services.rendering import render_depth
from rooms.refinement.tools.alignment import offset_seeded_depth, primitive_terms

logger = structlog.get_logger()


@dataclass
class RefinementResult:
    pose: Pose
    seeds: np.ndarray
    cost_trace: list[float] = field(default_factory=list)
    initial_cost: float = 0.0
    final_cost: float = 0.0
    no_overlap: bool = False
    accepted: bool = False
    dropped_pixels: int = 0
    relative: Pose = field(default_factory=Pose.identity)

    def to_dict(self) -> dict:
        return {
            "pose": self.pose.to_list(),
            "seeds": [float(v) for v in self.seeds],
            "initial_cost": self.initial_cost,
            "final_cost": self.final_cost,
            "no_overlap": self.no_overlap,
            "accepted": self.accepted,
            "dropped_pixels": self.dropped_pixels,
        }


class _Problem:
    """Precomputed δ = 1 points of every primitive against a fixed rendering."""

    def __init__(self, primitives: Sequence[QueryPrimitive], K: Intrinsics, D: DepthMap):
        self.K = K
        self.D = D
        seeded = [offset_seeded_depth(p, 1.0, K) for p in primitives]
        self.points = [s.points for s in seeded]
        self.dropped = sum(s.dropped for s in seeded)
        self.owner = np.concatenate([np.full(len(pts), k) for k, pts in enumerate(self.points)]) \
            if self.points else np.zeros(0, dtype=int)
        self.offsets = np.concatenate([[0], np.cumsum([len(pts) for pts in self.points])])

    @property
    def size(self) -> int:
        return len(self.points)

    def cost(self, T: Pose, deltas: np.ndarray, picks: Optional[np.ndarray] = None, gradient: bool = False):
        grad_xi, grad_delta, total, valid = np.zeros(6), np.zeros(self.size), 0.0, 0
        for k, pts in enumerate(self.points):
            if picks is not None:
                pts = pts[picks[k]]
            if len(pts) == 0:
                continue
            terms = primitive_terms(pts, float(deltas[k]), T, self.K, self.D, with_gradient=gradient)
            total += terms.residual
            valid += terms.valid_count
            grad_xi += terms.grad_xi
            grad_delta[k] = terms.grad_delta
        n = max(self.size, 1)
        return total / n, grad_xi / n, grad_delta / n, valid

    def sample(self, rng: np.random.Generator, count: int) -> list[np.ndarray]:
        """Per-primitive local indices of `count` pixels drawn uniformly over all masks."""
        drawn = rng.integers(0, len(self.owner), size=count)
        owners = self.owner[drawn]
        return [drawn[owners == k] - self.offsets[k] for k in range(self.size)]


def refine_pose(
    P0: Pose,
    query_primitives: Sequence[QueryPrimitive],
    map_primitives: Sequence[MapPrimitive],
    K: Intrinsics,
    cfg: RefineConfig,
    rendering: Optional[DepthMap] = None,
) -> RefinementResult:
    """
    Refine P₀ by aligning query primitive depth with the map rendered at P₀.

    Returns:
        RefinementResult; `no_overlap` is set (and P₀ returned) when no primitive
        pixel warps onto valid rendered depth
    """
    started = time.perf_counter()
    D = rendering if rendering is not None else render_depth(map_primitives, P0, K)
    problem = _Problem(query_primitives, K, D)
    ones = np.ones(problem.size)

    initial_cost, _, _, overlap = problem.cost(Pose.identity(), ones)
    if overlap == 0:
        logger.warning("Refinement skipped: no overlap with the rendering", primitives=problem.size)
        return RefinementResult(
            pose=P0,
            seeds=ones,
            no_overlap=True,
            dropped_pixels=problem.dropped,
        )

    xi = torch.zeros(6, dtype=torch.float64, requires_grad=True)
    log_delta = torch.zeros(problem.size, dtype=torch.float64, requires_grad=True)
    optimizer = torch.optim.Adam(
        [
            {"params": [xi], "lr": cfg.lr_pose},
            {"params": [log_delta], "lr": cfg.lr_offsets},
        ],
        betas=(cfg.beta1, cfg.beta2),
        eps=cfg.eps,
    )
    rng = np.random.default_rng(cfg.rng_seed)
    T_tr = Pose.identity()
    trace = []

    for _ in range(cfg.iterations):
        deltas = np.exp(log_delta.detach().numpy())
        picks = problem.sample(rng, cfg.pixel_sample_count)
        cost, grad_xi, grad_delta, _ = problem.cost(T_tr, deltas, picks, gradient=True)
        trace.append(cost)

        optimizer.zero_grad()
        xi.grad = torch.as_tensor(grad_xi, dtype=torch.float64)
        log_delta.grad = torch.as_tensor(grad_delta * deltas, dtype=torch.float64)
        optimizer.step()

        with torch.no_grad():
            T_tr = compose(se3_exp(xi.detach().numpy()), T_tr)
            xi.zero_()

    final_deltas = np.exp(log_delta.detach().numpy())
    final_cost, _, _, _ = problem.cost(T_tr, final_deltas)
    accepted = final_cost <= initial_cost
    result = RefinementResult(
        pose=compose(P0, T_tr) if accepted else P0,
        seeds=final_deltas if accepted else ones,
        cost_trace=trace,
        initial_cost=initial_cost,
        final_cost=final_cost if accepted else initial_cost,
        accepted=accepted,
        dropped_pixels=problem.dropped,
        relative=T_tr if accepted else Pose.identity(),
    )
    logger.debug(
        "Refinement finished",
        iterations=cfg.iterations,
        initial_cost=initial_cost,
        final_cost=result.final_cost,
        accepted=accepted,
        duration_ms=int((time.perf_counter() - started) * 1000),
    )
    return result
