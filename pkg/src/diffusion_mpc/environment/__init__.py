from .constraint_suites import (
    action_box_from_demos,
    has_corridor,
    novel_constraint_suite,
    satisfaction_fraction,
    suite_statistics,
)
from .expert import ExpertPolicy, all_routes, generate_demos, route_histogram, run_expert
from .mismatch import DisturbanceModel, estimate_gamma, rollout_mismatch
from .plant import EnvConfig, EnvState, PointMassPlant, env_step, goal_indicator, initial_state

__all__ = [
    'DisturbanceModel',
    'EnvConfig',
    'EnvState',
    'ExpertPolicy',
    'PointMassPlant',
    'action_box_from_demos',
    'all_routes',
    'env_step',
    'estimate_gamma',
    'generate_demos',
    'goal_indicator',
    'has_corridor',
    'initial_state',
    'novel_constraint_suite',
    'rollout_mismatch',
    'route_histogram',
    'run_expert',
    'satisfaction_fraction',
    'suite_statistics',
]
