from dataclasses import dataclass
import logging
import time
from typing import Optional

import numpy as np

from ..audit.logger import DiagnosticsLogger
from ..core.data_model import Box, StageConstraintSet
from ..core.dynamics import NominalDynamics
from ..core.normalization import normalize_constraints
from ..diffusion.sampler import make_generator, sample_unconstrained
from ..diffusion.trainer import Checkpoint
from ..errors import InvalidArgumentError
from ..models import StepDiagnostics
from ..monitoring.metrics import MetricsCollector
from ..projection.feasible_set import FeasibleSetSpec
from ..projection.tightening import tighten
from .denoising import DenoiseOutput, denoise_guided, denoise_postprocess, denoise_projected
from .selection import select_trajectory
from .settings import ControllerConfig, ControllerState, Method

@dataclass
class ControlStep:
    action: np.ndarray
    selected: np.ndarray
    index: int
    output: DenoiseOutput
    record: StepDiagnostics

    @property
    def fallback(self) -> bool:
        return self.record.fallback


def dataset_action_box(checkpoint: Checkpoint) -> Box:
    """Smallest box holding every demonstration action (raw units)"""
    norm = checkpoint.normalizer
    d_s = norm.state_dim
    return Box(lower=norm.lower[d_s:], upper=norm.upper[d_s:], coords=tuple(range(norm.action_dim)))


class DiffusionController:
    """Receding-horizon diffusion controller.

    Every call samples a batch of plans from the current measured state,
    picks one and returns its first action in raw units.
    """

    def __init__(
        self,
        checkpoint: Checkpoint,
        constraints: StageConstraintSet,
        config: ControllerConfig,
        dynamics: NominalDynamics,
        gamma: float = 0.0,
        seed: int = 0,
        metrics: Optional[MetricsCollector] = None,
        diagnostics: Optional[DiagnosticsLogger] = None
    ):
        self.logger = logging.getLogger(__name__)
        self.checkpoint = checkpoint
        self.config = config
        self.metrics = metrics
        self.diagnostics = diagnostics
        dims = checkpoint.dims
        if config.horizon is not None and int(config.horizon) != dims.horizon:
            raise InvalidArgumentError(
                "controller horizon does not match the checkpoint",
                {'config': config.horizon, 'checkpoint': dims.horizon}
            )
        if config.diffusion_steps is not None and int(config.diffusion_steps) != checkpoint.sched.K:
            raise InvalidArgumentError(
                "controller diffusion steps do not match the checkpoint",
                {'config': config.diffusion_steps, 'checkpoint': checkpoint.sched.K}
            )
        if constraints.horizon != dims.horizon:
            raise InvalidArgumentError(
                "constraint set horizon does not match the checkpoint",
                {'constraints': constraints.horizon, 'checkpoint': dims.horizon}
            )

        normalizer = checkpoint.normalizer
        self.normalizer = normalizer
        self.state_dim = dims.state_dim
        self.raw_action_box = constraints.action_box or dataset_action_box(checkpoint)
        self.true_constraints = normalize_constraints(constraints.with_action_box(self.raw_action_box), normalizer)
        self.gamma = float(gamma)
        planning = tighten(self.true_constraints, self.gamma) if config.tightening else self.true_constraints
        self.planning_constraints = planning
        self.spec = FeasibleSetSpec(
            constraints=planning,
            s_t=np.zeros(self.state_dim),
            dynamics=normalizer.normalize_dynamics(dynamics),
            use_dynamics=config.method is not Method.MODEL_FREE,
            tightened=config.tightening
        )

        self.generator = make_generator(seed)
        self.rng = np.random.default_rng(seed)

    def _denoise(self, s_t: np.ndarray) -> DenoiseOutput:
        ckpt, cfg = self.checkpoint, self.config
        B = cfg.batch_size
        method = cfg.method
        if method.projects_while_denoising:
            return denoise_projected(ckpt.net, ckpt.sched, s_t, self.spec, B, self.generator, cfg.solver)
        if method is Method.POST_PROCESSING:
            return denoise_postprocess(ckpt.net, ckpt.sched, s_t, self.spec, B, self.generator, cfg.solver)
        if method is Method.GUIDANCE:
            batch = denoise_guided(ckpt.net, ckpt.sched, s_t, self.planning_constraints,
                                   cfg.guidance_weight, B, self.generator)
        else:
            batch = sample_unconstrained(ckpt.net, s_t, B, ckpt.sched, self.generator)
            batch = batch.detach().cpu().numpy().astype(float)
        return DenoiseOutput(batch, np.zeros(B), np.ones(B, dtype=bool))

    def control_step(self, s_t: np.ndarray, state: ControllerState) -> ControlStep:
        """Plan from raw state s_t and return the first action of the chosen plan"""
        s_t = np.asarray(s_t, dtype=float).reshape(-1)
        if not np.all(np.isfinite(s_t)):
            raise InvalidArgumentError("measured state must be finite", {'s_t': s_t.tolist()})
        start = time.perf_counter()

        s_norm = self.normalizer.normalize(s_t, 'state')
        output = self._denoise(s_norm)
        index = select_trajectory(
            output.trajectories,
            self.config.selection,
            state,
            costs=output.costs,
            rng=self.rng,
            converged=output.converged
        )
        selected = output.trajectories[index]

        action = self.normalizer.denormalize(selected[0, self.state_dim:], 'action')
        box = self.raw_action_box
        cols = list(box.coords)
        action[cols] = np.clip(action[cols], box.lower, box.upper)

        fallback = not bool(output.converged.any())
        if fallback:
            self.logger.warning(f"t={state.step}: no candidate projection converged, using fallback plan")
        elapsed = time.perf_counter() - start

        record = StepDiagnostics(
            t=state.step,
            method=self.config.label,
            selected_index=index,
            costs=[float(c) for c in output.costs],
            converged=[bool(c) for c in output.converged],
            fallback=fallback,
            fallback_count=output.fallbacks,
            action=[float(a) for a in action],
            latency_s=elapsed
        )
        state.update(selected, index)

        if self.metrics is not None:
            self.metrics.record_control_step(self.config.label, elapsed)
            if self.config.method is not Method.DIFFUSER and self.config.method is not Method.GUIDANCE:
                for ok in output.converged:
                    self.metrics.record_projection(bool(ok), fallback=output.fallbacks > 0)
        if self.diagnostics is not None and self.config.diagnostics:
            self.diagnostics.log_event(record)
        return ControlStep(action=action, selected=selected, index=index, output=output, record=record)


def control_step(controller: DiffusionController, s_t: np.ndarray, state: ControllerState) -> ControlStep:
    return controller.control_step(s_t, state)
