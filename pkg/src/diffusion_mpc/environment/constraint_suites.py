import logging
from typing import Dict, Iterable, List, Optional, Sequence

import numpy as np
from scipy import ndimage

from ..core.data_model import (
    AvoidDisk, Box, ConstraintPrimitive, ConstraintSuite, Demonstration, Halfspace, StageConstraintSet
)
from ..errors import ConfigurationError, InvalidArgumentError
from ..projection.tightening import tighten_primitives
from ..projection.violations import violation_report
from .plant import EnvConfig

logger = logging.getLogger(__name__)

CORRIDOR_RESOLUTION = 0.02


def action_box_from_demos(demos: Sequence[Demonstration]) -> Box:
    """Smallest box containing every demonstration action"""
    if not demos:
        raise InvalidArgumentError("action box needs at least one demonstration")
    actions = np.concatenate([np.asarray(d.actions, dtype=float) for d in demos])
    return Box(lower=actions.min(axis=0), upper=actions.max(axis=0), coords=tuple(range(actions.shape[1])))


def demo_satisfies(demo: Demonstration, primitives: Sequence[ConstraintPrimitive]) -> bool:
    if not primitives:
        return True
    return all(violation_report(s, primitives).max() <= 0.0 for s in np.asarray(demo.states))


def satisfaction_fraction(demos: Sequence[Demonstration], primitives: Sequence[ConstraintPrimitive]) -> float:
    if not demos:
        return 0.0
    return sum(demo_satisfies(d, primitives) for d in demos) / len(demos)


def _position_primitives(primitives: Iterable[ConstraintPrimitive]) -> List[ConstraintPrimitive]:
    return [p for p in primitives if set(p.coords) <= {0, 1}]


def _violated_mask(points: np.ndarray, primitive: ConstraintPrimitive) -> np.ndarray:
    """Vectorized membership test on (N, 2) positions"""
    sub = points[:, list(primitive.coords)]
    if isinstance(primitive, Halfspace):
        return sub @ primitive.normal > primitive.offset
    if isinstance(primitive, Box):
        return np.any((sub < primitive.lower) | (sub > primitive.upper), axis=1)
    if isinstance(primitive, AvoidDisk):
        return np.linalg.norm(sub - primitive.center, axis=1) < primitive.radius
    raise TypeError(f"Unsupported primitive: {type(primitive).__name__}")


def has_corridor(
    config: EnvConfig,
    primitives: Sequence[ConstraintPrimitive],
    resolution: float = CORRIDOR_RESOLUTION
) -> bool:
    """Flood-fill the free workspace from the start and check the goal line is reachable"""
    lo = np.array(config.workspace_lower)
    hi = np.array(config.workspace_upper)
    xs = np.arange(lo[0], hi[0] + resolution / 2, resolution)
    ys = np.arange(lo[1], hi[1] + resolution / 2, resolution)
    grid_x, grid_y = np.meshgrid(xs, ys, indexing='ij')
    points = np.stack([grid_x.ravel(), grid_y.ravel()], axis=1)

    blocked = np.zeros(points.shape[0], dtype=bool)
    for primitive in list(config.obstacles) + _position_primitives(primitives):
        blocked |= _violated_mask(points, primitive)
    free = ~blocked.reshape(grid_x.shape)

    labels, _ = ndimage.label(free)
    start = (int(np.argmin(np.abs(xs - config.start[0]))), int(np.argmin(np.abs(ys - config.start[1]))))
    start_label = labels[start]
    if start_label == 0:
        return False
    goal_rows = ys >= config.goal_y
    return bool(np.any(labels[:, goal_rows] == start_label))


def novel_constraint_suite(
    config: EnvConfig,
    suites: Sequence[ConstraintSuite],
    horizon: int,
    demos: Optional[Sequence[Demonstration]] = None,
    action_box: Optional[Box] = None,
    margin: float = 0.0
) -> List[StageConstraintSet]:
    """Raw-unit stage sets for the test-time suites.

    The action box comes from the demonstrations when given, otherwise from
    ``action_box``. ``margin`` is the tightening in raw position units used
    for the corridor check.
    """
    if demos:
        action_box = action_box_from_demos(demos)
    sets = []
    for suite in suites:
        eroded = tighten_primitives(suite.all_primitives(), margin) if margin > 0 else suite.all_primitives()
        if not has_corridor(config, eroded):
            raise ConfigurationError(
                f"Constraint suite '{suite.name}' leaves no corridor from start to goal",
                {'suite': suite.name, 'margin': margin}
            )
        sets.append(suite.stage_set(horizon, action_box))
    return sets


def suite_statistics(
    suites: Sequence[ConstraintSuite],
    demos: Sequence[Demonstration],
    margin: float = 0.0
) -> Dict[str, Dict[str, float]]:
    """Fraction of demonstrations satisfying each suite, untightened and tightened"""
    stats = {}
    for suite in suites:
        primitives = suite.all_primitives()
        stats[suite.name] = {
            'satisfied': satisfaction_fraction(demos, primitives),
            'satisfied_tightened': satisfaction_fraction(demos, tighten_primitives(primitives, margin)),
            'margin': margin
        }
        logger.info(
            f"Suite {suite.name}: {stats[suite.name]['satisfied']:.3f} of demos satisfy it "
            f"({stats[suite.name]['satisfied_tightened']:.3f} tightened)"
        )
    return stats
