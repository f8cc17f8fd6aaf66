from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from ..core.data_model import AvoidDisk
from ..core.dynamics import NominalDynamics
from ..errors import InvalidArgumentError


@dataclass
class EnvConfig:
    """2D reach-the-line world; positions in raw workspace units"""
    workspace_lower: Tuple[float, float] = (-1.0, -1.0)
    workspace_upper: Tuple[float, float] = (1.0, 1.0)
    goal_y: float = 0.9
    start: Tuple[float, float] = (0.0, -0.9)
    start_jitter: float = 0.1
    obstacle_rows: Tuple[float, ...] = (-0.45, 0.05, 0.55)
    obstacle_columns: Tuple[float, ...] = (-0.1, 0.1)
    obstacle_radius: float = 0.12
    t_s: float = 0.1
    k_p: Optional[float] = 5.0
    v_max: float = 0.5
    v_nom: float = 0.3
    speed_jitter: float = 0.03
    noise_amp: float = 0.0
    max_steps: int = 300
    pass_offset: float = 0.42
    pass_margin: float = 0.1
    waypoint_jitter: float = 0.05
    waypoint_tolerance: float = 0.05
    final_x: float = 0.3
    final_y: float = 0.98
    demo_retries: int = 20

    def __post_init__(self):
        self.workspace_lower = tuple(float(v) for v in self.workspace_lower)
        self.workspace_upper = tuple(float(v) for v in self.workspace_upper)
        self.start = tuple(float(v) for v in self.start)
        self.obstacle_rows = tuple(float(v) for v in self.obstacle_rows)
        self.obstacle_columns = tuple(float(v) for v in self.obstacle_columns)
        if self.t_s <= 0 or self.v_max <= 0 or self.max_steps < 1:
            raise InvalidArgumentError("t_s, v_max and max_steps must be positive")
        if self.k_p is not None and self.k_p <= 0:
            raise InvalidArgumentError("k_p must be positive or null", {'k_p': self.k_p})
        lo, hi = np.array(self.workspace_lower), np.array(self.workspace_upper)
        for obstacle in self.obstacles:
            if np.any(obstacle.center - obstacle.radius < lo) or np.any(obstacle.center + obstacle.radius > hi):
                raise InvalidArgumentError("training obstacles must lie inside the workspace")
        if not lo[1] < self.goal_y <= hi[1]:
            raise InvalidArgumentError("goal line must lie inside the workspace", {'goal_y': self.goal_y})

    @property
    def obstacles(self) -> List[AvoidDisk]:
        return [
            AvoidDisk(center=(x, y), radius=self.obstacle_radius, coords=(0, 1))
            for y in self.obstacle_rows for x in self.obstacle_columns
        ]

    @property
    def route_count(self) -> int:
        return 2 ** len(self.obstacle_rows)

    def nominal_dynamics(self, factor: float = 1.0) -> NominalDynamics:
        return NominalDynamics.euler(self.t_s * factor)

    @classmethod
    def from_dict(cls, data: Optional[Dict[str, Any]]) -> 'EnvConfig':
        data = dict(data or {})
        known = {k: v for k, v in data.items() if k in cls.__dataclass_fields__}
        for key in ('workspace_lower', 'workspace_upper', 'start', 'obstacle_rows', 'obstacle_columns'):
            if key in known:
                known[key] = tuple(known[key])
        return cls(**known)

    def to_dict(self) -> Dict[str, Any]:
        return {k: (list(v) if isinstance(v, tuple) else v)
                for k, v in self.__dict__.items() if k in self.__dataclass_fields__}


@dataclass
class EnvState:
    """s = [p; d]: actual then desired end-effector position"""
    position: np.ndarray
    desired: np.ndarray
    step: int = 0

    @property
    def vector(self) -> np.ndarray:
        return np.concatenate([self.position, self.desired])

    @classmethod
    def from_vector(cls, s: np.ndarray, step: int = 0) -> 'EnvState':
        s = np.asarray(s, dtype=float)
        return cls(position=s[:2].copy(), desired=s[2:4].copy(), step=step)


def _saturate(v: np.ndarray, limit: float) -> np.ndarray:
    norm = float(np.linalg.norm(v))
    return v if norm <= limit else v * (limit / norm)


def env_step(
    state: np.ndarray,
    action: np.ndarray,
    config: EnvConfig,
    rng: Optional[np.random.Generator] = None
) -> np.ndarray:
    """True plant: the desired position integrates the action, the actual position lags behind it.

    d' = d + a t_s
    p' = p + sat(k_p (d - p), v_max) t_s      (k_p = None: p' = p + a t_s)
    """
    s = np.asarray(state, dtype=float)
    p, d = s[:2], s[2:4]
    a = np.clip(np.asarray(action, dtype=float), -config.v_max, config.v_max)

    d_next = d + a * config.t_s
    if config.k_p is None:
        p_next = p + a * config.t_s
    else:
        p_next = p + _saturate(config.k_p * (d - p), config.v_max) * config.t_s

    if config.noise_amp > 0 and rng is not None:
        direction = rng.normal(size=2)
        direction /= max(np.linalg.norm(direction), 1e-12)
        p_next = p_next + direction * config.noise_amp * rng.uniform()
    return np.concatenate([p_next, d_next])


def goal_indicator(state: np.ndarray, goal_y: float) -> int:
    """1 iff the actual position has reached the goal line (closed boundary)"""
    return int(float(np.asarray(state, dtype=float)[1]) >= goal_y)


def initial_state(config: EnvConfig, rng: np.random.Generator) -> np.ndarray:
    x = config.start[0] + rng.uniform(-config.start_jitter, config.start_jitter)
    p = np.array([x, config.start[1]])
    return np.concatenate([p, p])


class PointMassPlant:
    """Stateful wrapper used by the episode runner"""

    def __init__(self, config: EnvConfig, seed: int = 0):
        self.config = config
        self.rng = np.random.default_rng(seed)
        self.state = initial_state(config, self.rng)
        self.steps = 0

    def nominal_step(self, action: np.ndarray) -> np.ndarray:
        """Next state under the nominal point-mass model, action clipped to v_max"""
        a = np.clip(np.asarray(action, dtype=float), -self.config.v_max, self.config.v_max)
        return self.config.nominal_dynamics().step(self.state, a)

    def step(self, action: np.ndarray, disturbance: Optional[np.ndarray] = None) -> np.ndarray:
        """Lagged plant update; with a disturbance the nominal model plus the disturbance"""
        if disturbance is None:
            nxt = env_step(self.state, action, self.config, self.rng)
        else:
            nxt = self.nominal_step(action) + disturbance
        self.state = nxt
        self.steps += 1
        return nxt

    @property
    def done(self) -> bool:
        return bool(goal_indicator(self.state, self.config.goal_y)) or self.steps >= self.config.max_steps
