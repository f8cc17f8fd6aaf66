from dataclasses import asdict, dataclass
import math
from typing import Any, Dict, Optional

import torch
from torch import nn

from ..errors import InvalidArgumentError, NumericError


@dataclass
class NetworkDims:
    horizon: int = 7
    state_dim: int = 4
    action_dim: int = 2
    hidden: int = 256
    layers: int = 3
    embed_dim: int = 32

    @property
    def transition_dim(self) -> int:
        return self.state_dim + self.action_dim

    @property
    def flat_dim(self) -> int:
        return (self.horizon + 1) * self.transition_dim

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'NetworkDims':
        return cls(**{k: int(v) for k, v in data.items() if k in cls.__dataclass_fields__})


def sinusoidal_embedding(k: torch.Tensor, dim: int) -> torch.Tensor:
    """(N,) diffusion steps -> (N, dim) sin/cos features"""
    half = dim // 2
    freqs = torch.exp(-math.log(10000.0) * torch.arange(half, dtype=k.dtype) / max(half, 1))
    angles = k[:, None] * freqs[None, :]
    return torch.cat([angles.sin(), angles.cos()], dim=-1)


class DenoiserNet(nn.Module):
    """MLP noise predictor eps_theta(tau^k, k).

    Input is the flattened trajectory concatenated with a sinusoidal embedding
    of k; output has the trajectory's shape. The current state enters only
    through inpainting.
    """

    def __init__(self, dims: NetworkDims):
        super().__init__()
        self.dims = dims
        width = dims.flat_dim + dims.embed_dim
        blocks = []
        for _ in range(dims.layers):
            blocks += [nn.Linear(width, dims.hidden), nn.GELU()]
            width = dims.hidden
        blocks.append(nn.Linear(width, dims.flat_dim))
        self.mlp = nn.Sequential(*blocks)

    def forward(self, tau_k: torch.Tensor, k: torch.Tensor) -> torch.Tensor:
        batch = tau_k.shape[0]
        k = torch.as_tensor(k, dtype=tau_k.dtype).reshape(-1).expand(batch)
        features = torch.cat([tau_k.reshape(batch, -1), sinusoidal_embedding(k, self.dims.embed_dim)], dim=-1)
        return self.mlp(features).reshape(tau_k.shape)

    @property
    def parameter_count(self) -> int:
        return sum(p.numel() for p in self.parameters())


def build_denoiser(dims: NetworkDims, seed: int = 0, dtype: torch.dtype = torch.float64) -> DenoiserNet:
    """Deterministic initialization from ``seed`` without touching the global RNG"""
    with torch.random.fork_rng(devices=[]):
        torch.manual_seed(seed)
        net = DenoiserNet(dims)
    return net.to(dtype)


def denoiser_forward(net: DenoiserNet, tau_k: torch.Tensor, k: int, K: Optional[int] = None) -> torch.Tensor:
    """Noise prediction for a single (H+1, d) trajectory or a (B, H+1, d) batch"""
    if K is not None and not 1 <= int(k) <= K:
        raise InvalidArgumentError("k must lie in [1, K]", {'k': int(k), 'K': K})
    tau_k = torch.as_tensor(tau_k, dtype=next(net.parameters()).dtype)
    if not torch.isfinite(tau_k).all():
        raise NumericError("non-finite denoiser input", {'k': int(k)})
    single = tau_k.dim() == 2
    batch = tau_k.unsqueeze(0) if single else tau_k
    out = net(batch, torch.tensor(float(k), dtype=batch.dtype))
    return out[0] if single else out
