from typing import Iterable, Tuple

import numpy as np

from ..core.data_model import AvoidDisk, Box, ConstraintPrimitive, Halfspace, StageConstraintSet
from ..errors import EmptySetError, InvalidArgumentError


def tighten_primitive(primitive: ConstraintPrimitive, gamma: float) -> ConstraintPrimitive:
    """Minkowski erosion of one primitive by the l2 ball of radius gamma"""
    if isinstance(primitive, Halfspace):
        return Halfspace(
            normal=primitive.normal,
            offset=primitive.offset - gamma * float(np.linalg.norm(primitive.normal)),
            coords=primitive.coords
        )
    if isinstance(primitive, Box):
        lower = primitive.lower + gamma
        upper = primitive.upper - gamma
        if np.any(lower > upper):
            raise EmptySetError(
                "tightened box is empty",
                {'lower': lower.tolist(), 'upper': upper.tolist(), 'gamma': gamma}
            )
        return Box(lower=lower, upper=upper, coords=primitive.coords)
    if isinstance(primitive, AvoidDisk):
        return AvoidDisk(center=primitive.center, radius=primitive.radius + gamma, coords=primitive.coords)
    raise InvalidArgumentError(f"Unsupported primitive: {type(primitive).__name__}")


def tighten_primitives(primitives: Iterable[ConstraintPrimitive], gamma: float) -> Tuple[ConstraintPrimitive, ...]:
    return tuple(tighten_primitive(p, gamma) for p in primitives)


def tighten(constraints: StageConstraintSet, gamma: float) -> StageConstraintSet:
    """Erode every state constraint by gamma.

    Erosion distributes over intersection, so eroding each primitive erodes
    the stage set. The action box is a hard actuator limit and is left as is.
    """
    if gamma < 0 or not np.isfinite(gamma):
        raise InvalidArgumentError("gamma must be a finite non-negative number", {'gamma': gamma})
    if gamma == 0:
        return constraints
    stages = tuple(tighten_primitives(stage, gamma) for stage in constraints.state_constraints)
    return StageConstraintSet(stages, constraints.action_box)
