from dataclasses import dataclass, field
import logging
from typing import List, Optional

import numpy as np
import torch

from ..core.data_model import AvoidDisk, Box, Halfspace, StageConstraintSet
from ..core.schedule import NoiseSchedule
from ..diffusion.denoiser import DenoiserNet
from ..diffusion.sampler import denoise_loop
from ..errors import InfeasibleProjectionError
from ..projection.feasible_set import FeasibleSetSpec, ProjectionResult
from ..projection.model_free import project_model_free
from ..projection.solver import ModelBasedProjector, SolverOptions, project

logger = logging.getLogger(__name__)

# keeps the disk penalty differentiable at the centre
_DIST_EPS = 1e-18


@dataclass
class DenoiseOutput:
    """Candidate batch (normalized) and per-candidate bookkeeping"""
    trajectories: np.ndarray
    costs: np.ndarray
    converged: np.ndarray
    fallbacks: int = 0
    projections: int = 0
    iterates: Optional[List[np.ndarray]] = field(default=None, repr=False)


class BatchProjector:
    """Projects every candidate of a denoising iterate and accumulates costs.

    Non-converged model-based projections fall back to the model-free
    projection of the solver's best iterate.
    """

    def __init__(self, spec: FeasibleSetSpec, options: SolverOptions, batch_size: int, record: bool = False):
        self.spec = spec
        self.options = options
        self.projector = ModelBasedProjector(options) if spec.use_dynamics else None
        self.costs = np.zeros(batch_size)
        self.converged = np.ones(batch_size, dtype=bool)
        self.fallbacks = 0
        self.projections = 0
        self.iterates: Optional[List[np.ndarray]] = [] if record else None

    def _project_one(self, x: np.ndarray) -> ProjectionResult:
        if self.projector is None:
            return project(x, self.spec, self.options)
        try:
            return self.projector.project(x, self.spec)
        except InfeasibleProjectionError as e:
            logger.warning(f"Projection infeasible, using model-free fallback: {e.message}")
            fallback = project_model_free(x, self.spec, self.options.model_free_sweeps)
            return ProjectionResult(fallback.trajectory, fallback.cost, fallback.iterations,
                                    False, fallback.max_violation, "infeasible")

    def project_array(self, batch: np.ndarray) -> np.ndarray:
        if self.iterates is not None:
            self.iterates.append(batch.copy())
        out = np.empty_like(batch)
        for j in range(batch.shape[0]):
            result = self._project_one(batch[j])
            self.projections += 1
            self.costs[j] += result.cost
            if result.converged:
                out[j] = result.trajectory
                continue
            self.converged[j] = False
            if self.spec.use_dynamics and result.status != "infeasible":
                self.fallbacks += 1
                out[j] = project_model_free(result.trajectory, self.spec,
                                            self.options.model_free_sweeps).trajectory
            else:
                out[j] = result.trajectory
        return out

    def hook(self, x: torch.Tensor, k: int) -> torch.Tensor:
        projected = self.project_array(x.detach().cpu().numpy().astype(float))
        return torch.as_tensor(projected, dtype=x.dtype)

    def output(self, trajectories: np.ndarray) -> DenoiseOutput:
        return DenoiseOutput(
            trajectories=trajectories,
            costs=self.costs.copy(),
            converged=self.converged.copy(),
            fallbacks=self.fallbacks,
            projections=self.projections,
            iterates=self.iterates
        )


def denoise_projected(
    net: DenoiserNet,
    sched: NoiseSchedule,
    s_t: np.ndarray,
    spec: FeasibleSetSpec,
    batch_size: int,
    generator: torch.Generator,
    options: Optional[SolverOptions] = None,
    record: bool = False
) -> DenoiseOutput:
    """tau^{k-1} = proj(mu_theta(tau^k, k) + sigma_k eps) at every denoising step.

    ``costs[j]`` sums the projection cost of each pre-projection iterate of
    candidate j over all K steps.
    """
    spec = spec.with_state(s_t)
    batch = BatchProjector(spec, options or SolverOptions(), batch_size, record)
    if spec.is_whole_space:
        x = denoise_loop(net, sched, s_t, batch_size, generator)
    else:
        x = denoise_loop(net, sched, s_t, batch_size, generator, step_hook=batch.hook)
    return batch.output(x.detach().cpu().numpy().astype(float))


def guidance_penalty(x: torch.Tensor, constraints: StageConstraintSet, state_dim: int) -> torch.Tensor:
    """Sum of squared violations per candidate, shape (B,).

    Covers the state constraints of stages 1..H and the action box at every
    stage.
    """
    penalty = torch.zeros(x.shape[0], dtype=x.dtype)
    for i, stage in enumerate(constraints.state_constraints):
        if i == 0:
            continue
        for primitive in stage:
            penalty = penalty + _primitive_penalty(x[:, i, :state_dim], primitive)
    if constraints.action_box is not None:
        per_step = _primitive_penalty(x[:, :, state_dim:], constraints.action_box)
        penalty = penalty + per_step.sum(dim=-1)
    return penalty


def _primitive_penalty(points: torch.Tensor, primitive) -> torch.Tensor:
    coords = list(primitive.coords)
    sub = points[..., coords]
    if isinstance(primitive, Halfspace):
        normal = torch.as_tensor(np.array(primitive.normal), dtype=points.dtype)
        return torch.relu(sub @ normal - primitive.offset) ** 2
    if isinstance(primitive, Box):
        lower = torch.as_tensor(np.array(primitive.lower), dtype=points.dtype)
        upper = torch.as_tensor(np.array(primitive.upper), dtype=points.dtype)
        return (torch.relu(lower - sub) ** 2 + torch.relu(sub - upper) ** 2).sum(dim=-1)
    if isinstance(primitive, AvoidDisk):
        center = torch.as_tensor(np.array(primitive.center), dtype=points.dtype)
        dist = torch.sqrt(((sub - center) ** 2).sum(dim=-1) + _DIST_EPS)
        return torch.relu(primitive.radius - dist) ** 2
    raise TypeError(f"Unsupported primitive: {type(primitive).__name__}")


def denoise_guided(
    net: DenoiserNet,
    sched: NoiseSchedule,
    s_t: np.ndarray,
    constraints: StageConstraintSet,
    weight: float,
    batch_size: int,
    generator: torch.Generator
) -> np.ndarray:
    """Shift each mean by -weight * sigma_k^2 * grad(penalty) before adding noise"""
    state_dim = len(np.asarray(s_t).reshape(-1))

    def steer(mu: torch.Tensor, k: int) -> torch.Tensor:
        variance = float(sched.sigma[k]) ** 2
        if weight == 0 or variance == 0:
            return mu
        with torch.enable_grad():
            point = mu.detach().requires_grad_(True)
            penalty = guidance_penalty(point, constraints, state_dim).sum()
            grad, = torch.autograd.grad(penalty, point)
        return (mu - weight * variance * grad).detach()

    x = denoise_loop(net, sched, s_t, batch_size, generator, mean_hook=steer)
    return x.detach().cpu().numpy().astype(float)


def denoise_postprocess(
    net: DenoiserNet,
    sched: NoiseSchedule,
    s_t: np.ndarray,
    spec: FeasibleSetSpec,
    batch_size: int,
    generator: torch.Generator,
    options: Optional[SolverOptions] = None
) -> DenoiseOutput:
    """Unconstrained sampling, then a single projection per sample"""
    spec = spec.with_state(s_t)
    x = denoise_loop(net, sched, s_t, batch_size, generator)
    raw = x.detach().cpu().numpy().astype(float)
    batch = BatchProjector(spec, options or SolverOptions(), batch_size)
    return batch.output(batch.project_array(raw))
