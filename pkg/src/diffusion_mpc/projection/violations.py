from typing import Iterable, Optional, Tuple

import numpy as np

from ..core.data_model import AvoidDisk, Box, ConstraintPrimitive, Halfspace, StageConstraintSet

FEASIBILITY_TOL = 1e-6
CENTER_TOL = 1e-9


def primitive_violation(x: np.ndarray, primitive: ConstraintPrimitive) -> float:
    """Violation magnitude of one primitive at point x (full state or action vector)"""
    sub = np.asarray(x, dtype=float)[list(primitive.coords)]
    if isinstance(primitive, Halfspace):
        return max(0.0, float(primitive.normal @ sub - primitive.offset))
    if isinstance(primitive, Box):
        excess = np.maximum(primitive.lower - sub, sub - primitive.upper)
        return max(0.0, float(excess.max()))
    if isinstance(primitive, AvoidDisk):
        return max(0.0, primitive.radius - float(np.linalg.norm(sub - primitive.center)))
    raise TypeError(f"Unsupported primitive: {type(primitive).__name__}")


def violation_report(state: np.ndarray, primitives: Iterable[ConstraintPrimitive]) -> np.ndarray:
    """Per-primitive violation magnitudes; all zeros iff the state is feasible.

    halfspace: max(0, a.s - b); box: largest componentwise excess;
    disk: max(0, r - ||s - p||).
    """
    return np.array([primitive_violation(state, p) for p in primitives], dtype=float)


def primitive_slack(x: np.ndarray, primitive: ConstraintPrimitive) -> Tuple[float, np.ndarray]:
    """Signed distance to the primitive's boundary and the unit direction that shrinks it.

    The direction lives in the full vector space of ``x``.
    """
    x = np.asarray(x, dtype=float)
    coords = list(primitive.coords)
    sub = x[coords]
    direction = np.zeros_like(x)
    if isinstance(primitive, Halfspace):
        norm = float(np.linalg.norm(primitive.normal))
        direction[coords] = primitive.normal / norm
        return float(primitive.offset - primitive.normal @ sub) / norm, direction
    if isinstance(primitive, Box):
        gaps = np.concatenate([sub - primitive.lower, primitive.upper - sub])
        i = int(np.argmin(gaps))
        n = len(coords)
        direction[coords[i % n]] = -1.0 if i < n else 1.0
        return float(gaps[i]), direction
    if isinstance(primitive, AvoidDisk):
        offset = sub - primitive.center
        dist = float(np.linalg.norm(offset))
        unit = offset / dist if dist > CENTER_TOL else np.array([1.0, 0.0])
        direction[coords] = -unit
        return dist - primitive.radius, direction
    raise TypeError(f"Unsupported primitive: {type(primitive).__name__}")


def max_violation(
    traj: np.ndarray,
    constraints: StageConstraintSet,
    state_dim: int,
    first_stage: int = 1
) -> float:
    """Largest violation over stages first_stage..H and the action box at every stage.

    ``traj`` is the (H+1, d_s + d_a) array form.
    """
    worst = 0.0
    for i, stage in enumerate(constraints.state_constraints):
        if i < first_stage or not stage:
            continue
        worst = max(worst, float(violation_report(traj[i, :state_dim], stage).max()))
    if constraints.action_box is not None:
        for row in traj[:, state_dim:]:
            worst = max(worst, primitive_violation(row, constraints.action_box))
    return worst


def is_violated(state: np.ndarray, primitives: Iterable[ConstraintPrimitive],
                threshold: float = FEASIBILITY_TOL) -> bool:
    primitives = list(primitives)
    if not primitives:
        return False
    return bool(violation_report(state, primitives).max() > threshold)

