"""Diffusion predictive control with test-time constraints.

A trajectory diffusion model trained on expert demonstrations is turned
into a receding-horizon controller whose denoising steps are interleaved
with projections onto a dynamics-consistent, tightened feasible set.
"""

from .controller import ControllerConfig, ControllerState, DiffusionController, Method
from .core import NoiseSchedule, Normalizer, StageConstraintSet, Trajectory
from .diffusion import Checkpoint, TrainConfig, load_checkpoint, save_checkpoint, train
from .errors import DiffusionMPCError

__version__ = "0.1.0"

__all__ = [
    'Checkpoint',
    'ControllerConfig',
    'ControllerState',
    'DiffusionController',
    'DiffusionMPCError',
    'Method',
    'NoiseSchedule',
    'Normalizer',
    'StageConstraintSet',
    'TrainConfig',
    'Trajectory',
    'load_checkpoint',
    'save_checkpoint',
    'train',
]
