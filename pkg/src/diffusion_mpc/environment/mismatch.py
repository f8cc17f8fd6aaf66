import logging
from typing import Optional, Protocol, Sequence

import numpy as np

from ..core.data_model import ConstraintPrimitive
from ..core.dynamics import NominalDynamics
from ..core.normalization import Normalizer
from ..errors import InvalidArgumentError
from ..projection.violations import primitive_slack
from .plant import EnvConfig, PointMassPlant

logger = logging.getLogger(__name__)

SAFETY_FACTOR = 1.1


class RolloutPolicy(Protocol):
    def reset(self, seed: int = 0) -> None: ...

    def __call__(self, state: np.ndarray) -> np.ndarray: ...


def rollout_mismatch(
    policy: RolloutPolicy,
    config: EnvConfig,
    normalizer: Normalizer,
    seed: int,
    dynamics: Optional[NominalDynamics] = None
) -> np.ndarray:
    """Per-step ||s_{t+1} - f(s_t, a_t)|| in normalized units for one unconstrained rollout"""
    dynamics = dynamics or config.nominal_dynamics()
    scale = normalizer.scale[:normalizer.state_dim]
    policy.reset(seed)
    plant = PointMassPlant(config, seed)
    norms = []
    while not plant.done:
        state = plant.state.copy()
        action = np.clip(policy(state), -config.v_max, config.v_max)
        predicted = dynamics.step(state, action)
        actual = plant.step(action)
        norms.append(float(np.linalg.norm((actual - predicted) / scale)))
    return np.asarray(norms)


def estimate_gamma(
    policy: RolloutPolicy,
    config: EnvConfig,
    normalizer: Normalizer,
    n_rollouts: int = 100,
    seed: int = 0,
    safety_factor: float = SAFETY_FACTOR,
    dynamics: Optional[NominalDynamics] = None
) -> float:
    """Upper bound on the model mismatch: safety_factor times the largest step error seen"""
    if n_rollouts < 1:
        raise InvalidArgumentError("need at least one rollout", {'n_rollouts': n_rollouts})
    worst = 0.0
    for r in range(n_rollouts):
        trace = rollout_mismatch(policy, config, normalizer, seed + r, dynamics)
        if trace.size:
            worst = max(worst, float(trace.max()))
    gamma = safety_factor * worst
    logger.info(f"Estimated mismatch bound gamma={gamma:.5f} from {n_rollouts} rollouts")
    return gamma


class DisturbanceModel:
    """Additive disturbance of norm exactly gamma (normalized units).

    ``adversarial`` pushes the predicted next state towards the constraint
    with the least slack; ``random`` draws a uniform direction.
    """

    def __init__(
        self,
        gamma: float,
        normalizer: Normalizer,
        primitives: Sequence[ConstraintPrimitive] = (),
        mode: str = 'adversarial',
        seed: int = 0
    ):
        if mode not in ('adversarial', 'random'):
            raise InvalidArgumentError(f"Unknown disturbance mode: {mode}")
        self.gamma = float(gamma)
        self.normalizer = normalizer
        self.primitives = list(primitives)
        self.mode = mode
        self.rng = np.random.default_rng(seed)

    def __call__(self, predicted_raw: np.ndarray) -> np.ndarray:
        """Raw-unit disturbance for a plant whose undisturbed next state is ``predicted_raw``"""
        d_s = self.normalizer.state_dim
        s_norm = self.normalizer.normalize(predicted_raw, 'state')
        direction: Optional[np.ndarray] = None
        if self.mode == 'adversarial' and self.primitives:
            slacks = [primitive_slack(s_norm, p) for p in self.primitives]
            _, direction = min(slacks, key=lambda item: item[0])
        if direction is None:
            direction = self.rng.normal(size=d_s)
            direction /= max(np.linalg.norm(direction), 1e-12)
        return self.gamma * direction * self.normalizer.scale[:d_s]


