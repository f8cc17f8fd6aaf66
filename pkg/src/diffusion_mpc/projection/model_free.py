from typing import Union

import numpy as np

from ..core.data_model import AvoidDisk, Box, ConstraintPrimitive, Halfspace, Trajectory
from .feasible_set import FeasibleSetSpec, ProjectionResult
from .violations import CENTER_TOL, FEASIBILITY_TOL, max_violation, violation_report

DEFAULT_SWEEPS = 20


def project_point(x: np.ndarray, primitive: ConstraintPrimitive) -> np.ndarray:
    """Euclidean projection of one point onto one primitive (disk: radial push-out)"""
    x = np.array(x, dtype=float)
    coords = list(primitive.coords)
    sub = x[coords]
    if isinstance(primitive, Halfspace):
        excess = float(primitive.normal @ sub - primitive.offset)
        if excess > 0:
            x[coords] = sub - excess / float(primitive.normal @ primitive.normal) * primitive.normal
    elif isinstance(primitive, Box):
        x[coords] = np.clip(sub, primitive.lower, primitive.upper)
    elif isinstance(primitive, AvoidDisk):
        offset = sub - primitive.center
        dist = float(np.linalg.norm(offset))
        if dist < primitive.radius:
            # the centre has no unique nearest boundary point; push along +x
            unit = offset / dist if dist > CENTER_TOL else np.array([1.0, 0.0])
            x[coords] = primitive.center + primitive.radius * unit
    else:
        raise TypeError(f"Unsupported primitive: {type(primitive).__name__}")
    return x


def project_onto_stage(x: np.ndarray, primitives, max_sweeps: int = DEFAULT_SWEEPS,
                       tol: float = FEASIBILITY_TOL) -> np.ndarray:
    """Cyclic projections onto an intersection of primitives"""
    primitives = list(primitives)
    x = np.asarray(x, dtype=float)
    if not primitives:
        return x
    for _ in range(max_sweeps):
        if violation_report(x, primitives).max() <= tol:
            break
        for primitive in primitives:
            x = project_point(x, primitive)
    return x


def project_model_free(
    tau: Union[np.ndarray, Trajectory],
    spec: FeasibleSetSpec,
    max_sweeps: int = DEFAULT_SWEEPS,
    feasibility_tol: float = FEASIBILITY_TOL
) -> ProjectionResult:
    """Project every state and action onto its own stage set, ignoring dynamics.

    The first state slot is reset to the measured state.
    """
    target = tau.as_array() if isinstance(tau, Trajectory) else np.asarray(tau, dtype=float)
    d_s = spec.state_dim
    out = target.copy()
    out[0, :d_s] = spec.s_t

    constraints = spec.constraints
    for i, stage in enumerate(constraints.state_constraints):
        if i == 0 or not stage:
            continue
        out[i, :d_s] = project_onto_stage(out[i, :d_s], stage, max_sweeps, feasibility_tol)
    if constraints.action_box is not None:
        for i in range(out.shape[0]):
            out[i, d_s:] = project_point(out[i, d_s:], constraints.action_box)

    worst = max_violation(out, constraints, d_s)
    return ProjectionResult(
        trajectory=out,
        cost=float(np.sum((out - target) ** 2)),
        iterations=max_sweeps,
        converged=worst <= feasibility_tol,
        max_violation=worst,
        status="model-free"
    )
