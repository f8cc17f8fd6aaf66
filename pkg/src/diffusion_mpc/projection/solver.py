"""Model-based projection onto the dynamics-feasible constraint set.

States are eliminated through the affine nominal model, so the decision
variables are the actions a_0..a_{H-1}; the final action a_H has no effect on
any state and is simply clamped to the action box. The reduced problem is
solved with SLSQP.
"""
from dataclasses import dataclass
import logging
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.optimize import linprog, minimize

from ..core.data_model import AvoidDisk, Box, Halfspace, Trajectory
from ..errors import InfeasibleProjectionError, InvalidArgumentError
from .feasible_set import FeasibleSetSpec, ProjectionResult
from .model_free import DEFAULT_SWEEPS, project_model_free, project_point
from .violations import CENTER_TOL, FEASIBILITY_TOL, max_violation

logger = logging.getLogger(__name__)

# scipy SLSQP exit mode for incompatible linearized constraints
_INCOMPATIBLE = 4


@dataclass
class SolverOptions:
    max_iter: int = 50
    ftol: float = 1e-10
    feasibility_tol: float = FEASIBILITY_TOL
    retry: bool = True
    model_free_sweeps: int = DEFAULT_SWEEPS

    @classmethod
    def from_dict(cls, data: Optional[dict]) -> 'SolverOptions':
        data = data or {}
        return cls(
            max_iter=int(data.get('max_iter', 50)),
            ftol=float(data.get('ftol', 1e-10)),
            feasibility_tol=float(data.get('feasibility_tol', FEASIBILITY_TOL)),
            retry=bool(data.get('retry', True)),
            model_free_sweeps=int(data.get('model_free_sweeps', DEFAULT_SWEEPS))
        )


class ReducedProblem:
    """Condensed least-squares problem over the stacked actions u"""

    def __init__(self, target: np.ndarray, spec: FeasibleSetSpec):
        self.spec = spec
        self.target = target
        H = spec.horizon
        d_s = spec.state_dim
        dyn = spec.dynamics
        if target.shape != (H + 1, d_s + dyn.d_a):
            raise InvalidArgumentError(
                "trajectory shape does not match the feasible set",
                {'trajectory': list(target.shape), 'expected': [H + 1, d_s + dyn.d_a]}
            )
        self.H, self.d_s, self.d_a = H, d_s, dyn.d_a

        G, F, h = dyn.condensed(H)
        self.G = G
        self.base = F @ spec.s_t + h
        self.s_hat = target[1:, :d_s].reshape(-1)
        self.a_hat = target[:H, d_s:].reshape(-1)

        self._build_linear()
        self._build_disks()
        self.bounds = self._build_bounds()

    def _build_linear(self):
        rows: List[np.ndarray] = []
        rhs: List[float] = []
        width = self.H * self.d_s
        for i, stage in enumerate(self.spec.constraints.state_constraints):
            if i == 0:
                continue
            start = (i - 1) * self.d_s
            for primitive in stage:
                idx = [start + c for c in primitive.coords]
                if isinstance(primitive, Halfspace):
                    row = np.zeros(width)
                    row[idx] = primitive.normal
                    rows.append(row)
                    rhs.append(primitive.offset)
                elif isinstance(primitive, Box):
                    for j, col in enumerate(idx):
                        upper = np.zeros(width)
                        upper[col] = 1.0
                        rows.append(upper)
                        rhs.append(primitive.upper[j])
                        rows.append(-upper)
                        rhs.append(-primitive.lower[j])
        if rows:
            M = np.vstack(rows)
            # M S <= q with S = G u + base
            self.lin_A = M @ self.G
            self.lin_b = np.asarray(rhs) - M @ self.base
        else:
            self.lin_A = None
            self.lin_b = None

    def _build_disks(self):
        idx, centers, radii = [], [], []
        for i, stage in enumerate(self.spec.constraints.state_constraints):
            if i == 0:
                continue
            start = (i - 1) * self.d_s
            for primitive in stage:
                if isinstance(primitive, AvoidDisk):
                    idx.append([start + c for c in primitive.coords])
                    centers.append(primitive.center)
                    radii.append(primitive.radius)
        if idx:
            self.disk_idx = np.asarray(idx, dtype=int)
            self.disk_center = np.asarray(centers)
            self.disk_radius = np.asarray(radii)
        else:
            self.disk_idx = None

    def _build_bounds(self) -> Optional[List[Tuple[Optional[float], Optional[float]]]]:
        box = self.spec.constraints.action_box
        if box is None:
            return None
        per_dim: List[Tuple[Optional[float], Optional[float]]] = [(None, None)] * self.d_a
        for j, col in enumerate(box.coords):
            per_dim[col] = (float(box.lower[j]), float(box.upper[j]))
        return per_dim * self.H

    def states(self, u: np.ndarray) -> np.ndarray:
        return self.G @ u + self.base

    def objective(self, u: np.ndarray) -> float:
        ds = self.states(u) - self.s_hat
        da = u - self.a_hat
        return float(ds @ ds + da @ da)

    def gradient(self, u: np.ndarray) -> np.ndarray:
        return 2.0 * (self.G.T @ (self.states(u) - self.s_hat)) + 2.0 * (u - self.a_hat)

    def _disk_terms(self, u: np.ndarray):
        S = self.states(u)
        diff = S[self.disk_idx] - self.disk_center
        dist = np.linalg.norm(diff, axis=1)
        unit = np.empty_like(diff)
        near = dist <= CENTER_TOL
        unit[~near] = diff[~near] / dist[~near, None]
        unit[near] = np.array([1.0, 0.0])
        return dist, unit

    def disk_fun(self, u: np.ndarray) -> np.ndarray:
        dist, _ = self._disk_terms(u)
        return dist - self.disk_radius

    def disk_jac(self, u: np.ndarray) -> np.ndarray:
        _, unit = self._disk_terms(u)
        return unit[:, 0, None] * self.G[self.disk_idx[:, 0]] + unit[:, 1, None] * self.G[self.disk_idx[:, 1]]

    def constraints(self) -> List[dict]:
        cons = []
        if self.lin_A is not None:
            A, b = self.lin_A, self.lin_b
            cons.append({'type': 'ineq', 'fun': lambda u: b - A @ u, 'jac': lambda u: -A})
        if self.disk_idx is not None:
            cons.append({'type': 'ineq', 'fun': self.disk_fun, 'jac': self.disk_jac})
        return cons

    def clip(self, u: np.ndarray) -> np.ndarray:
        if self.bounds is None:
            return u
        lo = np.array([-np.inf if b[0] is None else b[0] for b in self.bounds])
        hi = np.array([np.inf if b[1] is None else b[1] for b in self.bounds])
        return np.clip(u, lo, hi)

    def assemble(self, u: np.ndarray) -> np.ndarray:
        out = np.empty_like(self.target)
        out[0, :self.d_s] = self.spec.s_t
        out[1:, :self.d_s] = self.states(u).reshape(self.H, self.d_s)
        out[:self.H, self.d_s:] = u.reshape(self.H, self.d_a)
        last = self.target[self.H, self.d_s:]
        box = self.spec.constraints.action_box
        out[self.H, self.d_s:] = project_point(last, box) if box is not None else last
        return out

    def linear_part_infeasible(self) -> bool:
        """Phase-one LP over the halfspace/box constraints and action bounds"""
        if self.lin_A is None:
            return False
        n = self.H * self.d_a
        res = linprog(np.zeros(n), A_ub=self.lin_A, b_ub=self.lin_b,
                      bounds=self.bounds if self.bounds is not None else (None, None),
                      method='highs')
        return res.status == 2


class ModelBasedProjector:
    def __init__(self, options: Optional[SolverOptions] = None):
        self.options = options or SolverOptions()

    def _solve(self, problem: ReducedProblem, u0: np.ndarray) -> Tuple[ProjectionResult, int]:
        opts = self.options
        res = minimize(
            problem.objective,
            problem.clip(u0),
            jac=problem.gradient,
            method='SLSQP',
            bounds=problem.bounds,
            constraints=problem.constraints(),
            options={'maxiter': opts.max_iter, 'ftol': opts.ftol}
        )
        u = problem.clip(np.asarray(res.x, dtype=float))
        traj = problem.assemble(u)
        worst = max_violation(traj, problem.spec.constraints, problem.d_s)
        converged = bool(res.success) and worst <= opts.feasibility_tol and np.all(np.isfinite(traj))
        result = ProjectionResult(
            trajectory=traj,
            cost=float(np.sum((traj - problem.target) ** 2)),
            iterations=int(getattr(res, 'nit', 0)),
            converged=converged,
            max_violation=worst,
            status=str(res.message)
        )
        return result, int(res.status)

    def project(self, tau: Union[np.ndarray, Trajectory], spec: FeasibleSetSpec) -> ProjectionResult:
        target = tau.as_array() if isinstance(tau, Trajectory) else np.asarray(tau, dtype=float)
        problem = ReducedProblem(target, spec)

        # fixed point: already feasible and consistent with the model
        if np.array_equal(target[0, :spec.state_dim], spec.s_t):
            consistent = spec.dynamics.residual(target[:, :spec.state_dim], target[:, spec.state_dim:]) <= 1e-12
            if consistent and max_violation(target, spec.constraints, spec.state_dim) == 0.0:
                return ProjectionResult(target.copy(), 0.0, 0, True, 0.0, "feasible input")

        result, status = self._solve(problem, problem.a_hat)
        if result.converged or not self.options.retry:
            return result

        # second attempt from the per-point projected iterate
        warm = project_model_free(target, spec, self.options.model_free_sweeps)
        retry, retry_status = self._solve(problem, warm.trajectory[:spec.horizon, spec.state_dim:].reshape(-1))
        candidates = [r for r in (result, retry) if r.converged]
        if candidates:
            return min(candidates, key=lambda r: r.cost)

        if status == _INCOMPATIBLE and retry_status == _INCOMPATIBLE and problem.linear_part_infeasible():
            raise InfeasibleProjectionError(
                "dynamics-feasible constraint set is empty",
                {'s_t': spec.s_t.tolist(), 'horizon': spec.horizon}
            )
        logger.debug(f"Projection did not converge: {result.status} / {retry.status}")
        return min((result, retry), key=lambda r: r.max_violation)


def project_model_based(
    tau: Union[np.ndarray, Trajectory],
    spec: FeasibleSetSpec,
    options: Optional[SolverOptions] = None
) -> ProjectionResult:
    """argmin ||tau - x||^2 over trajectories x that satisfy the nominal dynamics and stage sets"""
    if not spec.use_dynamics:
        raise InvalidArgumentError("feasible set has no dynamics; use project_model_free")
    return ModelBasedProjector(options).project(tau, spec)


def project(
    tau: Union[np.ndarray, Trajectory],
    spec: FeasibleSetSpec,
    options: Optional[SolverOptions] = None
) -> ProjectionResult:
    """Dispatch on ``spec.use_dynamics``; the whole space maps to the identity"""
    if spec.use_dynamics:
        return project_model_based(tau, spec, options)
    if spec.is_whole_space:
        target = tau.as_array() if isinstance(tau, Trajectory) else np.asarray(tau, dtype=float)
        return ProjectionResult(target.copy(), 0.0, 0, True, 0.0, "whole space")
    options = options or SolverOptions()
    return project_model_free(tau, spec, options.model_free_sweeps, options.feasibility_tol)


def projection_cost(
    tau: Union[np.ndarray, Trajectory],
    spec: FeasibleSetSpec,
    options: Optional[SolverOptions] = None
) -> float:
    """c(tau) = ||tau - proj(tau)||^2"""
    return project(tau, spec, options).cost


def project_batch(
    batch: Sequence[np.ndarray],
    spec: FeasibleSetSpec,
    options: Optional[SolverOptions] = None
) -> List[ProjectionResult]:
    projector = ModelBasedProjector(options) if spec.use_dynamics else None
    if projector is None:
        return [project(tau, spec, options) for tau in batch]
    return [projector.project(tau, spec) for tau in batch]
