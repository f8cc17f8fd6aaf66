from .checkpoint import SCHEMA_VERSION, load_checkpoint, save_checkpoint
from .denoiser import DenoiserNet, NetworkDims, build_denoiser, denoiser_forward
from .sampler import (
    denoise_loop,
    inpaint_condition,
    make_generator,
    posterior_mean,
    sample_unconstrained,
)
from .trainer import Checkpoint, DiffusionTrainer, TrainConfig, train, training_loss

__all__ = [
    'Checkpoint',
    'DenoiserNet',
    'DiffusionTrainer',
    'NetworkDims',
    'SCHEMA_VERSION',
    'TrainConfig',
    'build_denoiser',
    'denoise_loop',
    'denoiser_forward',
    'inpaint_condition',
    'load_checkpoint',
    'make_generator',
    'posterior_mean',
    'sample_unconstrained',
    'save_checkpoint',
    'train',
    'training_loss',
]
