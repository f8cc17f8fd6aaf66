from .data_model import (
    AvoidDisk,
    Box,
    ConstraintPrimitive,
    ConstraintSuite,
    Demonstration,
    Halfspace,
    StageConstraintSet,
    Trajectory,
    primitive_from_dict,
)
from .dynamics import NominalDynamics
from .normalization import Normalizer, normalize_constraints, normalizer_fit
from .schedule import NoiseSchedule, cosine_schedule, forward_marginal_sample

__all__ = [
    'AvoidDisk',
    'Box',
    'ConstraintPrimitive',
    'ConstraintSuite',
    'Demonstration',
    'Halfspace',
    'NoiseSchedule',
    'NominalDynamics',
    'Normalizer',
    'StageConstraintSet',
    'Trajectory',
    'cosine_schedule',
    'forward_marginal_sample',
    'normalize_constraints',
    'normalizer_fit',
    'primitive_from_dict',
]
