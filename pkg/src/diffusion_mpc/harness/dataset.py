import json
import logging
from pathlib import Path
from typing import List, Sequence, Union

import numpy as np

from ..core.data_model import Demonstration
from ..errors import ConfigurationError

logger = logging.getLogger(__name__)

DATASET_SCHEMA_VERSION = 1


def write_demos(path: Union[str, Path], demos: Sequence[Demonstration]) -> Path:
    """JSON Lines, one demonstration per line"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, 'w', encoding='utf-8') as f:
        for demo in demos:
            f.write(json.dumps({'schema_version': DATASET_SCHEMA_VERSION, **demo.to_dict()}) + '\n')
    logger.info(f"Wrote {len(demos)} demonstrations to {path}")
    return path


def read_demos(path: Union[str, Path]) -> List[Demonstration]:
    path = Path(path)
    if not path.exists():
        raise ConfigurationError(f"Demonstration file not found: {path}", {'path': str(path)})
    demos = []
    with open(path, 'r', encoding='utf-8') as f:
        for lineno, line in enumerate(f, start=1):
            if not line.strip():
                continue
            record = json.loads(line)
            version = record.get('schema_version')
            if version != DATASET_SCHEMA_VERSION:
                raise ConfigurationError(
                    f"Unsupported dataset schema version {version} on line {lineno}",
                    {'path': str(path), 'line': lineno}
                )
            demos.append(Demonstration.from_dict(record))
    return demos


def training_arrays(demos: Sequence[Demonstration]) -> List[np.ndarray]:
    """Row-wise [s; a] arrays, the layout the trainer expects"""
    return [np.hstack([np.asarray(d.states, dtype=float), np.asarray(d.actions, dtype=float)]) for d in demos]
