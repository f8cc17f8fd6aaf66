from .denoising import DenoiseOutput, denoise_guided, denoise_postprocess, denoise_projected, guidance_penalty
from .policy import ControlStep, DiffusionController, control_step, dataset_action_box
from .selection import select_trajectory
from .settings import ControllerConfig, ControllerState, Criterion, Method, parse_method

__all__ = [
    'ControlStep',
    'ControllerConfig',
    'ControllerState',
    'Criterion',
    'DenoiseOutput',
    'DiffusionController',
    'Method',
    'control_step',
    'dataset_action_box',
    'denoise_guided',
    'denoise_postprocess',
    'denoise_projected',
    'guidance_penalty',
    'parse_method',
    'select_trajectory',
]
