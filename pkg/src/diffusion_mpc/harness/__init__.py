from .dataset import read_demos, training_arrays, write_demos
from .episode import EpisodeRunner, StepTrace, run_episode
from .evaluation import (
    CSV_COLUMNS,
    ExperimentConfig,
    ablate_model_mismatch,
    aggregate,
    checkpoint_path,
    evaluate,
    method_grid,
    metrics_table,
    write_outputs,
)

__all__ = [
    'CSV_COLUMNS',
    'EpisodeRunner',
    'ExperimentConfig',
    'StepTrace',
    'ablate_model_mismatch',
    'aggregate',
    'checkpoint_path',
    'evaluate',
    'method_grid',
    'metrics_table',
    'read_demos',
    'run_episode',
    'training_arrays',
    'write_demos',
]
