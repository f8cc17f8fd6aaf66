from dataclasses import dataclass, field
import logging
from pathlib import Path
from typing import List, Optional, Union

import numpy as np

from ..audit.logger import DiagnosticsLogger
from ..controller.policy import DiffusionController
from ..controller.settings import ControllerConfig, ControllerState
from ..core.data_model import StageConstraintSet
from ..diffusion.trainer import Checkpoint
from ..environment.mismatch import DisturbanceModel
from ..environment.plant import EnvConfig, PointMassPlant, goal_indicator
from ..models import EpisodeResult
from ..monitoring.metrics import MetricsCollector
from ..projection.violations import FEASIBILITY_TOL, is_violated

logger = logging.getLogger(__name__)


@dataclass
class StepTrace:
    """What happened at one closed-loop step (raw next state)"""
    t: int
    state: np.ndarray
    action: np.ndarray
    converged: bool
    fallback: bool
    violated: bool


@dataclass
class EpisodeRunner:
    """Runs the receding-horizon loop until the goal line or the step cap"""
    checkpoint: Checkpoint
    controller_config: ControllerConfig
    env_config: EnvConfig
    constraints: StageConstraintSet
    seed: int = 0
    gamma: float = 0.0
    suite_name: str = ""
    train_seed: int = 0
    mismatch: float = 1.0
    disturbance: Optional[DisturbanceModel] = None
    violation_threshold: float = FEASIBILITY_TOL
    record_positions: bool = False
    metrics: Optional[MetricsCollector] = None
    diagnostics_path: Optional[Union[str, Path]] = None
    trace: List[StepTrace] = field(default_factory=list)

    def _controller(self, diagnostics: Optional[DiagnosticsLogger]) -> DiffusionController:
        return DiffusionController(
            self.checkpoint,
            self.constraints,
            self.controller_config,
            self.env_config.nominal_dynamics(self.mismatch),
            gamma=self.gamma,
            seed=self.seed,
            metrics=self.metrics,
            diagnostics=diagnostics
        )

    def run(self) -> EpisodeResult:
        if self.diagnostics_path is not None:
            with DiagnosticsLogger(self.diagnostics_path) as diagnostics:
                return self._run(diagnostics)
        return self._run(None)

    def _run(self, diagnostics: Optional[DiagnosticsLogger]) -> EpisodeResult:
        env = self.env_config
        controller = self._controller(diagnostics)
        normalizer = controller.normalizer
        # stage 1 holds the true state constraints for the next measured state
        true_primitives = controller.true_constraints.state_constraints[1]

        plant = PointMassPlant(env, self.seed)
        state = ControllerState()
        positions = [plant.state[:2].tolist()]
        violations = fallbacks = nonconverged = 0
        latencies = []
        self.trace = []

        if self.metrics is not None:
            self.metrics.active_episodes.inc()
        try:
            while not plant.done:
                s_t = plant.state.copy()
                step = controller.control_step(s_t, state)
                latencies.append(step.record.latency_s)
                converged = bool(step.output.converged[step.index])

                w = None
                if self.disturbance is not None:
                    w = self.disturbance(plant.nominal_step(step.action))
                s_next = plant.step(step.action, w)

                violated = is_violated(normalizer.normalize(s_next, 'state'), true_primitives,
                                       self.violation_threshold)
                violations += int(violated)
                fallbacks += int(step.fallback)
                nonconverged += int(not converged)
                positions.append(s_next[:2].tolist())
                self.trace.append(StepTrace(
                    t=state.step - 1,
                    state=s_next.copy(),
                    action=np.asarray(step.action, dtype=float),
                    converged=converged,
                    fallback=step.fallback,
                    violated=violated
                ))
        finally:
            if self.metrics is not None:
                self.metrics.active_episodes.dec()

        goal = bool(goal_indicator(plant.state, env.goal_y))
        result = EpisodeResult(
            method=self.controller_config.label,
            suite=self.suite_name,
            tightening=self.controller_config.tightening,
            mismatch=self.mismatch,
            train_seed=self.train_seed,
            test_seed=self.seed,
            timesteps=plant.steps if goal else env.max_steps,
            goal_reached=goal,
            constraints_and_goal=goal and violations == 0,
            violation_steps=violations,
            episode_length=plant.steps,
            fallback_steps=fallbacks,
            nonconverged_steps=nonconverged,
            mean_step_latency_s=float(np.mean(latencies)) if latencies else 0.0,
            positions=positions if self.record_positions else None
        )
        if self.metrics is not None:
            self.metrics.record_episode(result.method, result.outcome.value)
        if diagnostics is not None:
            diagnostics.log_event(result.model_dump(exclude={'positions'}), event_type='episode')
        logger.info(
            f"Episode {result.method} suite={result.suite} seed={self.seed}: {result.outcome.value} "
            f"in {result.episode_length} steps, {violations} violation steps"
        )
        return result


def run_episode(
    checkpoint: Checkpoint,
    controller_config: ControllerConfig,
    env_config: EnvConfig,
    constraints: StageConstraintSet,
    seed: int,
    **options
) -> EpisodeResult:
    """One closed-loop episode; see :class:`EpisodeRunner` for the options"""
    return EpisodeRunner(checkpoint, controller_config, env_config, constraints, seed, **options).run()
