from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..core.data_model import StageConstraintSet
from ..core.dynamics import NominalDynamics
from ..errors import InvalidArgumentError


@dataclass(frozen=True, eq=False)
class FeasibleSetSpec:
    """Trajectory set a projection maps onto (normalized units).

    The first state slot is the measured state ``s_t``; it is held fixed and
    never checked against stage-0 constraints.
    """
    constraints: StageConstraintSet
    s_t: np.ndarray
    dynamics: Optional[NominalDynamics] = None
    use_dynamics: bool = True
    tightened: bool = False

    def __post_init__(self):
        s_t = np.asarray(self.s_t, dtype=float).reshape(-1)
        s_t.setflags(write=False)
        object.__setattr__(self, 's_t', s_t)
        if self.use_dynamics and self.dynamics is None:
            raise InvalidArgumentError("model-based projection needs nominal dynamics")
        if self.dynamics is not None and self.dynamics.d_s != s_t.size:
            raise InvalidArgumentError(
                "measured state does not match the dynamics dimension",
                {'d_s': self.dynamics.d_s, 's_t': s_t.size}
            )

    @property
    def horizon(self) -> int:
        return self.constraints.horizon

    @property
    def state_dim(self) -> int:
        return self.s_t.size

    @property
    def is_whole_space(self) -> bool:
        return not self.use_dynamics and self.constraints.is_whole_space

    @classmethod
    def whole_space(cls, s_t: np.ndarray, horizon: int) -> 'FeasibleSetSpec':
        return cls(StageConstraintSet.whole_space(horizon), s_t, use_dynamics=False)

    def with_state(self, s_t: np.ndarray) -> 'FeasibleSetSpec':
        return FeasibleSetSpec(self.constraints, s_t, self.dynamics, self.use_dynamics, self.tightened)

    def model_free(self) -> 'FeasibleSetSpec':
        return FeasibleSetSpec(self.constraints, self.s_t, self.dynamics, False, self.tightened)


@dataclass(frozen=True, eq=False)
class ProjectionResult:
    """cost is the squared l2 distance between input and output"""
    trajectory: np.ndarray
    cost: float
    iterations: int
    converged: bool
    max_violation: float
    status: str = ""

    def as_trajectory(self, state_dim: int, t: int = 0):
        from ..core.data_model import Trajectory
        return Trajectory.from_array(self.trajectory, state_dim, t)
