import numpy as np
import pytest

from diffusion_mpc.core.data_model import (
    AvoidDisk, Box, ConstraintSuite, Demonstration, Halfspace, StageConstraintSet, Trajectory,
    primitive_from_dict
)
from diffusion_mpc.errors import InvalidArgumentError


@pytest.fixture
def trajectory():
    states = np.arange(12, dtype=float).reshape(3, 4)
    actions = -np.arange(6, dtype=float).reshape(3, 2)
    return Trajectory(states=states, actions=actions, t=5)


def test_trajectory_layout(trajectory):
    """State before action inside every timestep, row-major over time"""
    assert trajectory.horizon == 2
    assert trajectory.state_dim == 4
    assert trajectory.action_dim == 2
    flat = trajectory.flatten()
    np.testing.assert_array_equal(flat[:6], [0, 1, 2, 3, 0, -1])
    np.testing.assert_array_equal(flat[6:10], [4, 5, 6, 7])


def test_trajectory_unflatten_inverts_flatten(trajectory):
    restored = Trajectory.unflatten(trajectory.flatten(), 4, 2, t=trajectory.t)
    np.testing.assert_array_equal(restored.states, trajectory.states)
    np.testing.assert_array_equal(restored.actions, trajectory.actions)
    assert restored.t == 5


def test_trajectory_is_immutable(trajectory):
    with pytest.raises(ValueError):
        trajectory.states[0, 0] = 1.0


def test_trajectory_validation():
    with pytest.raises(InvalidArgumentError):
        Trajectory(states=np.zeros((3, 4)), actions=np.zeros((2, 2)))
    with pytest.raises(InvalidArgumentError):
        Trajectory(states=np.full((2, 4), np.nan), actions=np.zeros((2, 2)))
    with pytest.raises(InvalidArgumentError):
        Trajectory.unflatten(np.zeros(7), 4, 2)


def test_primitive_from_dict_defaults_to_position_coords():
    disk = primitive_from_dict({'type': 'disk', 'center': [0.1, 0.2], 'radius': 0.3})
    assert isinstance(disk, AvoidDisk)
    assert disk.coords == (0, 1)
    halfspace = primitive_from_dict({'type': 'halfspace', 'normal': [1.0, 0.0], 'offset': 0.3})
    assert isinstance(halfspace, Halfspace)
    assert halfspace.to_dict()['offset'] == 0.3


@pytest.mark.parametrize("data", [
    {'type': 'polygon'},
    {'type': 'halfspace', 'normal': [0.0, 0.0], 'offset': 1.0},
    {'type': 'box', 'lower': [1.0, 0.0], 'upper': [0.0, 1.0]},
    {'type': 'disk', 'center': [0.0, 0.0], 'radius': 0.0},
    {'type': 'disk', 'center': [0.0, 0.0, 0.0], 'radius': 1.0},
])
def test_invalid_primitives(data):
    with pytest.raises(InvalidArgumentError):
        primitive_from_dict(data)


def test_stage_constraint_set_helpers():
    wall = Halfspace(normal=[1.0, 0.0], offset=0.3, coords=(0, 1))
    box = Box(lower=[-0.5, -0.5], upper=[0.5, 0.5], coords=(0, 1))
    constraints = StageConstraintSet.time_invariant([wall], 4, box)
    assert constraints.horizon == 4
    assert all(stage == (wall,) for stage in constraints.state_constraints)
    assert not constraints.is_whole_space
    assert StageConstraintSet.whole_space(4).is_whole_space
    assert constraints.with_action_box(None).action_box is None
    with pytest.raises(InvalidArgumentError):
        StageConstraintSet(())


def test_suite_from_dict_with_explicit_stages():
    suite = ConstraintSuite.from_dict({
        'name': 'growing',
        'stages': [
            [],
            [{'type': 'halfspace', 'normal': [1.0, 0.0], 'offset': 0.5}],
            [{'type': 'halfspace', 'normal': [1.0, 0.0], 'offset': 0.2}],
        ]
    })
    constraints = suite.stage_set(4)
    assert constraints.horizon == 4
    # the last listed stage repeats to the horizon
    assert constraints.state_constraints[4][0].offset == 0.2
    assert len(suite.all_primitives()) == 2
    assert ConstraintSuite.from_dict(suite.to_dict()).stage_set(4).horizon == 4


def test_demonstration_round_trip():
    demo = Demonstration(states=np.zeros((3, 4)), actions=np.ones((3, 2)), route_label='LRL', seed=7,
                         metadata={'attempts': 1})
    restored = Demonstration.from_dict(demo.to_dict())
    assert restored.length == 3
    assert restored.route_label == 'LRL'
    assert restored.seed == 7
    np.testing.assert_array_equal(restored.actions, demo.actions)
