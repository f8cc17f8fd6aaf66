import math
from typing import Callable, Optional, Union

import numpy as np
import torch

from ..core.data_model import Trajectory
from ..core.schedule import NoiseSchedule
from ..errors import InvalidArgumentError
from .denoiser import DenoiserNet

StepHook = Callable[[torch.Tensor, int], torch.Tensor]


def posterior_mean(tau_k, k: int, eps_hat, sched: NoiseSchedule):
    """mu = (tau^k - beta_k / sqrt(1 - abar_k) * eps_hat) / sqrt(alpha_k)"""
    if not 1 <= k <= sched.K:
        raise InvalidArgumentError("k must lie in [1, K]", {'k': k, 'K': sched.K})
    if tuple(np.shape(tau_k)) != tuple(np.shape(eps_hat)):
        raise InvalidArgumentError("eps_hat shape must match tau_k")
    beta = float(sched.beta[k])
    coef = beta / math.sqrt(1.0 - float(sched.alpha_bar[k])) if beta > 0 else 0.0
    return (tau_k - coef * eps_hat) / math.sqrt(float(sched.alpha[k]))


def inpaint_condition(tau, s_t):
    """Overwrite the first-state slot with s_t; nothing else changes"""
    if isinstance(tau, Trajectory):
        states = np.array(tau.states)
        states[0] = np.asarray(s_t, dtype=float)
        return Trajectory(states=states, actions=tau.actions, t=tau.t)
    if isinstance(tau, torch.Tensor):
        out = tau.clone()
        s_t = torch.as_tensor(s_t, dtype=tau.dtype)
    else:
        out = np.array(tau, dtype=float)
    d_s = s_t.shape[-1]
    out[..., 0, :d_s] = s_t
    return out


def denoise_loop(
    net: DenoiserNet,
    sched: NoiseSchedule,
    s_t: Union[np.ndarray, torch.Tensor],
    batch_size: int,
    generator: torch.Generator,
    mean_hook: Optional[StepHook] = None,
    step_hook: Optional[StepHook] = None
) -> torch.Tensor:
    """Backward process from N(0, I) with inpainting after every step.

    Every variant draws the same noise in the same order, so two runs that
    share a generator state differ only through their hooks.
    """
    if batch_size < 1:
        raise InvalidArgumentError("batch size must be >= 1", {'batch_size': batch_size})
    dims = net.dims
    dtype = next(net.parameters()).dtype
    shape = (batch_size, dims.horizon + 1, dims.transition_dim)
    s_t = torch.as_tensor(np.asarray(s_t, dtype=float), dtype=dtype)

    x = inpaint_condition(torch.randn(shape, generator=generator, dtype=dtype), s_t)
    for k in range(sched.K, 0, -1):
        with torch.no_grad():
            eps_hat = net(x, torch.tensor(float(k), dtype=dtype))
        mu = posterior_mean(x, k, eps_hat, sched)
        if mean_hook is not None:
            mu = mean_hook(mu, k)
        noise = torch.randn(shape, generator=generator, dtype=dtype)
        x = inpaint_condition(mu + float(sched.sigma[k]) * noise, s_t)
        if step_hook is not None:
            x = step_hook(x, k)
    return x


def sample_unconstrained(
    net: DenoiserNet,
    s_t: np.ndarray,
    batch_size: int,
    sched: NoiseSchedule,
    generator: torch.Generator
) -> torch.Tensor:
    """B trajectories from p_theta conditioned on s_t by inpainting, shape (B, H+1, d)"""
    return denoise_loop(net, sched, s_t, batch_size, generator)


def make_generator(seed: int) -> torch.Generator:
    return torch.Generator().manual_seed(int(seed))
