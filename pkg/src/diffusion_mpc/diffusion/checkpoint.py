import logging
from pathlib import Path
from typing import Any, Dict, Union

import torch

from ..core.normalization import Normalizer
from ..core.schedule import COSINE_OFFSET, cosine_schedule
from ..errors import CheckpointFormatError, CheckpointNotFoundError
from .denoiser import NetworkDims, build_denoiser
from .trainer import Checkpoint, TrainConfig

logger = logging.getLogger(__name__)

SCHEMA_VERSION = 1


def checkpoint_to_dict(checkpoint: Checkpoint) -> Dict[str, Any]:
    return {
        'schema_version': SCHEMA_VERSION,
        'state_dict': {k: v.detach().clone() for k, v in checkpoint.net.state_dict().items()},
        'dims': checkpoint.dims.to_dict(),
        'schedule': {'K': checkpoint.sched.K, 'offset': checkpoint.sched.offset},
        'normalizer': checkpoint.normalizer.to_dict(),
        'train_config': checkpoint.config.to_dict(),
        'best_val_loss': float(checkpoint.best_val_loss),
        'best_step': int(checkpoint.best_step),
        'initial_val_loss': float(checkpoint.initial_val_loss),
        'history': checkpoint.history
    }


def save_checkpoint(checkpoint: Checkpoint, path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    torch.save(checkpoint_to_dict(checkpoint), path)
    logger.info(f"Saved checkpoint to {path}")
    return path


def load_checkpoint(path: Union[str, Path]) -> Checkpoint:
    path = Path(path)
    if not path.exists():
        raise CheckpointNotFoundError(f"Checkpoint not found: {path}", {'path': str(path)})
    try:
        payload = torch.load(path, map_location='cpu', weights_only=True)
    except Exception as e:
        raise CheckpointFormatError(f"Unreadable checkpoint {path}: {str(e)}", {'path': str(path)})

    version = payload.get('schema_version') if isinstance(payload, dict) else None
    if version != SCHEMA_VERSION:
        raise CheckpointFormatError(
            f"Unsupported checkpoint schema version: {version}",
            {'path': str(path), 'expected': SCHEMA_VERSION}
        )
    try:
        dims = NetworkDims.from_dict(payload['dims'])
        config = TrainConfig.from_dict(payload['train_config'])
        net = build_denoiser(dims, seed=config.seed)
        net.load_state_dict(payload['state_dict'])
        net.eval()
        schedule = payload['schedule']
        sched = cosine_schedule(int(schedule['K']), s=float(schedule.get('offset', COSINE_OFFSET)))
        normalizer = Normalizer.from_dict(payload['normalizer'])
    except (KeyError, RuntimeError, TypeError) as e:
        raise CheckpointFormatError(f"Malformed checkpoint {path}: {str(e)}", {'path': str(path)})

    return Checkpoint(
        net=net,
        sched=sched,
        normalizer=normalizer,
        config=config,
        best_val_loss=float(payload.get('best_val_loss', float('nan'))),
        best_step=int(payload.get('best_step', 0)),
        initial_val_loss=float(payload.get('initial_val_loss', float('nan'))),
        history=list(payload.get('history', []))
    )
