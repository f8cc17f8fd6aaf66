from dataclasses import asdict, dataclass, field
import copy
import hashlib
import logging
import math
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
import torch
from torch.optim import Adam
from torch.optim.lr_scheduler import LambdaLR
from tqdm import tqdm

from ..core.dynamics import NominalDynamics
from ..core.normalization import Normalizer, normalizer_fit
from ..core.schedule import NoiseSchedule, cosine_schedule, forward_marginal_sample
from ..errors import InvalidArgumentError, TrainingError
from .denoiser import DenoiserNet, NetworkDims, build_denoiser
from .sampler import inpaint_condition, make_generator

logger = logging.getLogger(__name__)

MIN_TRAINING_TRAJECTORIES = 10


@dataclass
class TrainConfig:
    learning_rate: float = 1e-4
    batch_size: int = 8
    train_steps: int = 20000
    epochs: int = 100
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8
    validation_fraction: float = 0.1
    warmup_steps: int = 1000
    lr_schedule: str = 'cosine'
    diffusion_steps: int = 20
    horizon: int = 7
    hidden: int = 256
    layers: int = 3
    embed_dim: int = 32
    validation_repeats: int = 4
    seed: int = 0
    progress: bool = True

    def __post_init__(self):
        positive = {
            'learning_rate': self.learning_rate, 'batch_size': self.batch_size,
            'train_steps': self.train_steps, 'epochs': self.epochs,
            'adam_eps': self.adam_eps, 'diffusion_steps': self.diffusion_steps,
            'horizon': self.horizon, 'hidden': self.hidden, 'layers': self.layers,
            'validation_repeats': self.validation_repeats
        }
        bad = {k: v for k, v in positive.items() if not v > 0}
        if bad:
            raise InvalidArgumentError("training settings must be positive", bad)
        if not 0.0 < self.validation_fraction < 1.0:
            raise InvalidArgumentError(
                "validation fraction must lie in (0, 1)",
                {'validation_fraction': self.validation_fraction}
            )
        if not (0.0 <= self.adam_beta1 < 1.0 and 0.0 <= self.adam_beta2 < 1.0):
            raise InvalidArgumentError("Adam moments must lie in [0, 1)")
        if self.lr_schedule not in ('cosine', 'constant'):
            raise InvalidArgumentError(f"Unknown learning-rate schedule: {self.lr_schedule}")

    @classmethod
    def from_dict(cls, data: Optional[Dict[str, Any]]) -> 'TrainConfig':
        data = dict(data or {})
        known = {k: v for k, v in data.items() if k in cls.__dataclass_fields__}
        return cls(**known)

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    def network_dims(self, state_dim: int, action_dim: int) -> NetworkDims:
        return NetworkDims(
            horizon=self.horizon,
            state_dim=state_dim,
            action_dim=action_dim,
            hidden=self.hidden,
            layers=self.layers,
            embed_dim=self.embed_dim
        )


@dataclass
class Checkpoint:
    """Everything needed to sample: weights, schedule, normalizer and config"""
    net: DenoiserNet
    sched: NoiseSchedule
    normalizer: Normalizer
    config: TrainConfig
    best_val_loss: float = float('nan')
    best_step: int = 0
    initial_val_loss: float = float('nan')
    history: List[Dict[str, float]] = field(default_factory=list)

    @property
    def dims(self) -> NetworkDims:
        return self.net.dims


def split_indices(n: int, fraction: float) -> Tuple[List[int], List[int]]:
    """Deterministic train/validation split by a hash of the demonstration index"""
    if n < 2:
        raise InvalidArgumentError("need at least two demonstrations to split", {'n': n})
    keys = [int(hashlib.sha256(str(i).encode()).hexdigest(), 16) % 10000 / 10000.0 for i in range(n)]
    val = [i for i in range(n) if keys[i] < fraction]
    if not val:
        val = [int(np.argmin(keys))]
    if len(val) == n:
        val = val[:-1]
    val_set = set(val)
    return [i for i in range(n) if i not in val_set], val


def make_windows(
    demo: np.ndarray,
    horizon: int,
    state_dim: int,
    dynamics: Optional[NominalDynamics] = None
) -> np.ndarray:
    """All length-(H+1) windows of one (T, d) demonstration.

    Windows running past the end are padded by rolling the nominal model
    forward with the final action (or by repeating the last row when no
    model is given).
    """
    demo = np.asarray(demo, dtype=float)
    T = demo.shape[0]
    pad_rows = []
    last = demo[-1]
    for _ in range(horizon):
        if dynamics is not None:
            state = dynamics.step(last[:state_dim], last[state_dim:])
            last = np.concatenate([state, last[state_dim:]])
        pad_rows.append(last)
    padded = np.vstack([demo] + [np.asarray(pad_rows)]) if pad_rows else demo
    return np.stack([padded[t:t + horizon + 1] for t in range(T)])


def training_loss(
    net: DenoiserNet,
    tau0: torch.Tensor,
    sched: NoiseSchedule,
    generator: torch.Generator
) -> torch.Tensor:
    """Squared-l2 noise-prediction loss, summed per sample and averaged over the batch.

    The noised input gets its first-state slot replaced by the clean state,
    as at sampling time.
    """
    if tau0.shape[0] == 0:
        raise InvalidArgumentError("empty training batch")
    batch = tau0.shape[0]
    k = torch.randint(1, sched.K + 1, (batch,), generator=generator)
    eps = torch.randn(tau0.shape, generator=generator, dtype=tau0.dtype)
    tau_k = forward_marginal_sample(tau0, k, sched, eps)
    tau_k = inpaint_condition(tau_k, tau0[:, 0, :net.dims.state_dim])
    eps_hat = net(tau_k, k.to(tau0.dtype))
    return ((eps_hat - eps) ** 2).sum(dim=tuple(range(1, tau0.dim()))).mean()


def _lr_lambda(config: TrainConfig):
    warmup = max(config.warmup_steps, 0)
    total = config.train_steps

    def schedule(step: int) -> float:
        if warmup and step < warmup:
            return (step + 1) / warmup
        if config.lr_schedule == 'constant':
            return 1.0
        progress = (step - warmup) / max(1, total - warmup)
        return 0.5 * (1.0 + math.cos(math.pi * min(progress, 1.0)))
    return schedule


class DiffusionTrainer:
    def __init__(self, config: TrainConfig):
        self.config = config
        self.logger = logging.getLogger(__name__)

    def _validation_loss(self, net: DenoiserNet, windows: torch.Tensor, sched: NoiseSchedule) -> float:
        generator = make_generator(self.config.seed + 7919)
        with torch.no_grad():
            losses = [float(training_loss(net, windows, sched, generator))
                      for _ in range(self.config.validation_repeats)]
        return float(np.mean(losses))

    def train(
        self,
        dataset: Sequence[np.ndarray],
        state_dim: int,
        sched: Optional[NoiseSchedule] = None,
        dynamics: Optional[NominalDynamics] = None
    ) -> Checkpoint:
        cfg = self.config
        if len(dataset) < MIN_TRAINING_TRAJECTORIES:
            raise InvalidArgumentError(
                "not enough training trajectories",
                {'trajectories': len(dataset), 'minimum': MIN_TRAINING_TRAJECTORIES}
            )
        sched = sched or cosine_schedule(cfg.diffusion_steps)
        demos = [np.atleast_2d(np.asarray(d, dtype=float)) for d in dataset]

        normalizer = normalizer_fit(demos, state_dim=state_dim)
        norm_dynamics = normalizer.normalize_dynamics(dynamics) if dynamics is not None else None
        normed = [normalizer.normalize(d) for d in demos]

        train_idx, val_idx = split_indices(len(normed), cfg.validation_fraction)
        train_windows = np.concatenate(
            [make_windows(normed[i], cfg.horizon, state_dim, norm_dynamics) for i in train_idx])
        val_windows = np.concatenate(
            [make_windows(normed[i], cfg.horizon, state_dim, norm_dynamics) for i in val_idx])

        dims = cfg.network_dims(state_dim, demos[0].shape[1] - state_dim)
        net = build_denoiser(dims, seed=cfg.seed)
        dtype = next(net.parameters()).dtype
        train_t = torch.as_tensor(train_windows, dtype=dtype)
        val_t = torch.as_tensor(val_windows, dtype=dtype)

        optimizer = Adam(
            net.parameters(),
            lr=cfg.learning_rate,
            betas=(cfg.adam_beta1, cfg.adam_beta2),
            eps=cfg.adam_eps
        )
        scheduler = LambdaLR(optimizer, _lr_lambda(cfg))
        generator = make_generator(cfg.seed)

        initial_val = self._validation_loss(net, val_t, sched)
        best_val, best_step = initial_val, 0
        best_state = copy.deepcopy(net.state_dict())
        history: List[Dict[str, float]] = []
        steps_per_epoch = max(1, cfg.train_steps // cfg.epochs)
        running: List[float] = []

        self.logger.info(
            f"Training denoiser: {net.parameter_count} parameters, {train_t.shape[0]} train / "
            f"{val_t.shape[0]} validation windows, {cfg.train_steps} steps"
        )
        progress = tqdm(range(1, cfg.train_steps + 1), desc="train", disable=not cfg.progress, leave=False)
        for step in progress:
            idx = torch.randint(0, train_t.shape[0], (cfg.batch_size,), generator=generator)
            loss = training_loss(net, train_t[idx], sched, generator)
            if not torch.isfinite(loss):
                raise TrainingError(
                    "training loss is not finite",
                    {'step': step, 'loss': float(loss), 'lr': scheduler.get_last_lr()[0],
                     'best_val_loss': best_val}
                )
            optimizer.zero_grad()
            loss.backward()
            optimizer.step()
            scheduler.step()
            running.append(float(loss))

            if step % steps_per_epoch == 0 or step == cfg.train_steps:
                val = self._validation_loss(net, val_t, sched)
                epoch = len(history) + 1
                history.append({'epoch': epoch, 'step': step,
                                'train_loss': float(np.mean(running)), 'val_loss': val})
                running = []
                if val < best_val:
                    best_val, best_step = val, step
                    best_state = copy.deepcopy(net.state_dict())
                progress.set_postfix(val=f"{val:.4f}")
                self.logger.debug(f"epoch {epoch}: train {history[-1]['train_loss']:.4f} val {val:.4f}")

        net.load_state_dict(best_state)
        net.eval()
        self.logger.info(
            f"Training finished: best validation loss {best_val:.4f} at step {best_step} "
            f"(initial {initial_val:.4f})"
        )
        return Checkpoint(
            net=net,
            sched=sched,
            normalizer=normalizer,
            config=cfg,
            best_val_loss=best_val,
            best_step=best_step,
            initial_val_loss=initial_val,
            history=history
        )


def train(
    dataset: Sequence[np.ndarray],
    config: TrainConfig,
    state_dim: int,
    sched: Optional[NoiseSchedule] = None,
    dynamics: Optional[NominalDynamics] = None
) -> Checkpoint:
    return DiffusionTrainer(config).train(dataset, state_dim, sched, dynamics)
