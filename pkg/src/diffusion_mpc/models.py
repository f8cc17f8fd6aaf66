from enum import Enum
from typing import Dict, List, Optional

from pydantic import BaseModel, Field


class EpisodeOutcome(str, Enum):
    GOAL = "goal"
    GOAL_WITH_VIOLATIONS = "goal_with_violations"
    TIMEOUT = "timeout"


class StepDiagnostics(BaseModel):
    t: int
    method: str
    selected_index: int
    costs: List[float]
    converged: List[bool]
    fallback: bool = False
    fallback_count: int = 0
    action: List[float]
    latency_s: float = 0.0


class EpisodeResult(BaseModel):
    method: str
    suite: str
    tightening: bool
    mismatch: float = 1.0
    train_seed: int
    test_seed: int
    timesteps: int
    goal_reached: bool
    constraints_and_goal: bool
    violation_steps: int
    episode_length: int
    fallback_steps: int = 0
    nonconverged_steps: int = 0
    mean_step_latency_s: float = 0.0
    positions: Optional[List[List[float]]] = Field(default=None, repr=False)

    @property
    def outcome(self) -> EpisodeOutcome:
        if not self.goal_reached:
            return EpisodeOutcome.TIMEOUT
        if self.violation_steps:
            return EpisodeOutcome.GOAL_WITH_VIOLATIONS
        return EpisodeOutcome.GOAL


class AggregateMetrics(BaseModel):
    method: str
    tightening: bool
    mismatch: float
    episodes: int
    timesteps_mean: float
    timesteps_std: float
    goal_rate: float
    cg_rate: float
    viol_mean: float
    viol_std: float
    success_timesteps_mean: Optional[float] = None
    fallback_steps_mean: float = 0.0
    nonconverged_steps_mean: float = 0.0
    per_suite: Dict[str, float] = Field(default_factory=dict)
