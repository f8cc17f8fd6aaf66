from .feasible_set import FeasibleSetSpec, ProjectionResult
from .model_free import project_model_free
from .solver import (
    ModelBasedProjector,
    SolverOptions,
    project,
    project_batch,
    project_model_based,
    projection_cost,
)
from .tightening import tighten
from .violations import FEASIBILITY_TOL, max_violation, violation_report

__all__ = [
    'FEASIBILITY_TOL',
    'FeasibleSetSpec',
    'ModelBasedProjector',
    'ProjectionResult',
    'SolverOptions',
    'max_violation',
    'project',
    'project_batch',
    'project_model_based',
    'project_model_free',
    'projection_cost',
    'tighten',
    'violation_report',
]
