import json

import numpy as np
import pandas as pd
import pytest

from diffusion_mpc.controller.settings import ControllerConfig, Method
from diffusion_mpc.core.data_model import ConstraintSuite
from diffusion_mpc.errors import CheckpointNotFoundError, InvalidArgumentError
from diffusion_mpc.harness.evaluation import (
    CSV_COLUMNS, ExperimentConfig, aggregate, build_tasks, checkpoint_path, method_grid, metrics_table,
    suites_by_name, write_outputs
)
from diffusion_mpc.models import EpisodeResult


def episode(method='dpcc-c', tightening=True, timesteps=10, goal=True, violations=0, suite='wall', seed=0):
    return EpisodeResult(
        method=method, suite=suite, tightening=tightening, train_seed=0, test_seed=seed,
        timesteps=timesteps, goal_reached=goal, constraints_and_goal=goal and violations == 0,
        violation_steps=violations, episode_length=timesteps
    )


def test_aggregate_uses_population_std():
    results = [
        episode(timesteps=10, violations=0, seed=0),
        episode(timesteps=20, violations=2, seed=1),
        episode(method='diffuser', tightening=False, timesteps=30, goal=False, violations=4)
    ]
    rows = aggregate(results)
    assert [(r.method, r.tightening) for r in rows] == [('dpcc-c', True), ('diffuser', False)]
    first = rows[0]
    assert first.episodes == 2
    assert first.timesteps_mean == 15.0
    assert first.timesteps_std == 5.0
    assert first.viol_mean == 1.0
    assert first.viol_std == 1.0
    assert first.goal_rate == 1.0
    assert first.cg_rate == 0.5
    assert first.success_timesteps_mean == 15.0
    assert rows[1].success_timesteps_mean is None


def test_per_suite_rates():
    rows = aggregate([episode(suite='wall'), episode(suite='disk', violations=1)])
    assert rows[0].per_suite == {'wall': 1.0, 'disk': 0.0}
    extended = metrics_table(rows, extended=True)
    assert 'cg_rate[disk]' in extended.columns
    assert 'cg_rate[wall]' in extended.columns


def test_metrics_table_columns():
    table = metrics_table(aggregate([episode()]))
    assert list(table.columns) == CSV_COLUMNS
    empty = metrics_table([])
    assert list(empty.columns) == CSV_COLUMNS
    assert len(empty) == 0


def test_write_outputs(temp_dir):
    results = [episode(seed=0), episode(seed=1, timesteps=14)]
    results[0] = results[0].model_copy(update={'positions': [[0.0, -1.0], [0.0, -0.9]]})
    paths = write_outputs(temp_dir, aggregate(results), results)

    frame = pd.read_csv(paths['metrics'])
    assert list(frame.columns) == CSV_COLUMNS
    assert frame.loc[0, 'timesteps_mean'] == pytest.approx(12.0)

    lines = paths['episodes'].read_text().splitlines()
    assert len(lines) == 2
    assert 'positions' not in json.loads(lines[0])

    plot = json.loads(paths['plot_data'].read_text())
    assert plot['schema_version'] == 1
    assert list(plot['trajectories'].values()) == [[[0.0, -1.0], [0.0, -0.9]]]


def test_method_grid_expands_rows():
    experiment = ExperimentConfig(methods=['dpcc-c', 'diffuser', 'guidance'], guidance_weights=[0.1, 10.0])
    grid = method_grid(experiment, ControllerConfig(batch_size=2))
    labels = [(c.label, c.tightening) for c in grid]
    assert labels == [
        ('dpcc-c', True), ('dpcc-c', False),
        ('diffuser', False),
        ('guidance:w=0.1', True), ('guidance:w=0.1', False),
        ('guidance:w=10', True), ('guidance:w=10', False)
    ]
    assert all(c.batch_size == 2 for c in grid)


def test_method_grid_keeps_explicit_guidance_weight():
    grid = method_grid(ExperimentConfig(methods=['guidance:w=3'], tightening=[True]), ControllerConfig())
    assert len(grid) == 1
    assert grid[0].method is Method.GUIDANCE
    assert grid[0].guidance_weight == 3.0


@pytest.mark.parametrize('bad', [
    {'workers': 0},
    {'train_seeds': []},
    {'tightening': []},
    {'disturbance': 'storm'},
    {'mismatch_factors': [1.0, 0.0]},
    {'methods': ['mpc']},
    {'ablation_method': 'mpc'}
])
def test_experiment_config_validation(bad):
    with pytest.raises(InvalidArgumentError):
        ExperimentConfig(**bad)


def test_experiment_config_from_dict():
    config = ExperimentConfig.from_dict({'methods': ('dpcc-r',), 'workers': 3, 'unused': 1})
    assert config.methods == ['dpcc-r']
    assert config.workers == 3
    assert ExperimentConfig.from_dict(config.to_dict()) == config


def test_suites_by_name():
    suites = [ConstraintSuite.from_dict({'name': n, 'primitives': [{'type': 'box', 'lower': [-1, -1],
                                                                    'upper': [1, 1]}]})
              for n in ('a', 'b')]
    assert [s.name for s in suites_by_name(suites, None)] == ["a", "b"]
    assert [s.name for s in suites_by_name(suites, ['b'])] == ['b']
    with pytest.raises(InvalidArgumentError, match='Unknown constraint suite'):
        suites_by_name(suites, ['c'])


def test_checkpoint_path(temp_dir):
    assert checkpoint_path(temp_dir, 3) == temp_dir / 'seed_3' / 'checkpoint.pt'


def test_build_tasks(settings_factory):
    settings = settings_factory()
    assert build_tasks(settings, []) == []
    with pytest.raises(CheckpointNotFoundError):
        build_tasks(settings, [(settings.controller, 1.0)])
