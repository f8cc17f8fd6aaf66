from dataclasses import dataclass
import math

import numpy as np

from ..errors import InvalidArgumentError
from .data_model import Trajectory

COSINE_OFFSET = 0.008
BETA_CLIP = 0.999


@dataclass(frozen=True, eq=False)
class NoiseSchedule:
    """Per-step DDPM quantities, indexed by k = 0..K.

    ``alpha_bar[0]`` is 1 so that ``sigma[1]`` is zero and the last
    denoising step is deterministic.
    """
    K: int
    beta: np.ndarray
    alpha: np.ndarray
    alpha_bar: np.ndarray
    sigma: np.ndarray
    offset: float = COSINE_OFFSET

    def to_dict(self):
        return {'K': self.K, 'offset': self.offset, 'beta_clip': BETA_CLIP}


def cosine_schedule(K: int, s: float = COSINE_OFFSET, beta_clip: float = BETA_CLIP) -> NoiseSchedule:
    """Cosine schedule: alpha_bar_k = f(k)/f(0), f(k) = cos^2(((k/K + s)/(1 + s)) pi/2)"""
    if not isinstance(K, (int, np.integer)) or K < 1:
        raise InvalidArgumentError("K must be an integer >= 1", {'K': K})

    steps = np.arange(K + 1, dtype=float)
    f = np.cos(((steps / K + s) / (1.0 + s)) * math.pi / 2.0) ** 2
    cumulative = f / f[0]

    beta = np.zeros(K + 1)
    beta[1:] = np.minimum(1.0 - cumulative[1:] / cumulative[:-1], beta_clip)
    alpha = 1.0 - beta
    alpha[0] = 1.0
    alpha_bar = np.cumprod(alpha)

    sigma = np.zeros(K + 1)
    sigma_sq = beta[1:] * (1.0 - alpha_bar[:-1]) / (1.0 - alpha_bar[1:])
    sigma[1:] = np.sqrt(np.maximum(sigma_sq, 0.0))

    for arr in (beta, alpha, alpha_bar, sigma):
        arr.setflags(write=False)
    return NoiseSchedule(K=int(K), beta=beta, alpha=alpha, alpha_bar=alpha_bar, sigma=sigma, offset=s)


def forward_marginal_sample(tau0, k: int, sched: NoiseSchedule, eps):
    """Closed-form q(tau^k | tau^0) sample: sqrt(abar_k) tau0 + sqrt(1 - abar_k) eps.

    Works on numpy arrays, torch tensors or Trajectory objects. ``k`` may be
    an integer or, for batched tensors, a tensor of per-sample steps.
    """
    if isinstance(tau0, Trajectory):
        eps_arr = eps.as_array() if isinstance(eps, Trajectory) else np.asarray(eps, dtype=float)
        out = forward_marginal_sample(tau0.as_array(), k, sched, eps_arr)
        return Trajectory.from_array(out, tau0.state_dim, tau0.t)

    if tuple(tau0.shape) != tuple(eps.shape):
        raise InvalidArgumentError(
            "noise shape must match the trajectory",
            {'tau0': list(tau0.shape), 'eps': list(eps.shape)}
        )

    if isinstance(k, (int, np.integer)):
        if not 1 <= k <= sched.K:
            raise InvalidArgumentError("k must lie in [1, K]", {'k': int(k), 'K': sched.K})
        abar = float(sched.alpha_bar[k])
        return math.sqrt(abar) * tau0 + math.sqrt(1.0 - abar) * eps

    # per-sample steps on a batch tensor
    import torch
    abar = torch.tensor(np.array(sched.alpha_bar), dtype=tau0.dtype)[k]
    abar = abar.reshape(-1, *([1] * (tau0.dim() - 1)))
    return abar.sqrt() * tau0 + (1.0 - abar).sqrt() * eps
