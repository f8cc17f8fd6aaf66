from itertools import combinations
import time

import numpy as np
import pytest

from diffusion_mpc.core.data_model import AvoidDisk, Box, Halfspace, StageConstraintSet
from diffusion_mpc.core.dynamics import NominalDynamics
from diffusion_mpc.errors import InfeasibleProjectionError, InvalidArgumentError
from diffusion_mpc.projection.feasible_set import FeasibleSetSpec
from diffusion_mpc.projection.model_free import project_model_free, project_point
from diffusion_mpc.projection.solver import (
    ModelBasedProjector, SolverOptions, project, project_batch, project_model_based, projection_cost
)
from diffusion_mpc.projection.tightening import tighten
from diffusion_mpc.projection.violations import max_violation

SCALAR = NominalDynamics(A=[[1.0]], B=[[1.0]], c=[0.0])


def scalar_spec(primitives, action_box=None, s_t=0.0, dynamics=SCALAR, horizon=1):
    constraints = StageConstraintSet.time_invariant(primitives, horizon, action_box)
    return FeasibleSetSpec(constraints, np.array([s_t]), dynamics)


def planar_spec(s_t=None, horizon=4):
    """Euler point mass with a wall, a disk and an action box"""
    constraints = StageConstraintSet.time_invariant(
        [Halfspace(normal=[1.0, 0.0], offset=0.5, coords=(0, 1)),
         AvoidDisk(center=[0.0, 0.4], radius=0.2, coords=(0, 1))],
        horizon,
        Box(lower=[-1.0, -1.0], upper=[1.0, 1.0], coords=(0, 1))
    )
    s_t = np.zeros(4) if s_t is None else s_t
    return FeasibleSetSpec(constraints, s_t, NominalDynamics.euler(0.5))


def test_toy_projection_matches_kkt_solution():
    """s' = s + a, s_0 = 0, s_1 >= 0.5: optimum s_1 = a_0 = 0.5, cost 0.5"""
    spec = scalar_spec([Halfspace(normal=[-1.0], offset=-0.5, coords=(0,))])
    result = project_model_based(np.zeros((2, 2)), spec)
    assert result.converged
    assert result.cost == pytest.approx(0.5, abs=1e-6)
    np.testing.assert_allclose(result.trajectory, [[0.0, 0.5], [0.5, 0.0]], atol=1e-6)


def test_feasible_input_is_a_fixed_point():
    spec = scalar_spec([Halfspace(normal=[-1.0], offset=-0.5, coords=(0,))])
    tau = np.array([[0.0, 0.6], [0.6, 0.0]])
    result = project(tau, spec)
    assert result.cost == 0.0
    assert result.converged
    np.testing.assert_array_equal(result.trajectory, tau)


def test_scalar_projections_match_closed_form():
    """Random one-step problems against the analytic minimizer and a dense grid"""
    rng = np.random.default_rng(0)
    action_box = Box(lower=[-1.0], upper=[1.0], coords=(0,))
    grid = np.linspace(-1.0, 1.0, 20001)
    for _ in range(50):
        a, b = rng.uniform(0.5, 1.5, size=2)
        s0 = rng.uniform(-1.0, 1.0)
        a_star = rng.uniform(-0.8, 0.8)
        centre = a * s0 + b * a_star
        width = rng.uniform(0.05, 0.5)
        lo, hi = centre - width / 2, centre + width / 2
        dyn = NominalDynamics(A=[[a]], B=[[b]], c=[0.0])
        spec = scalar_spec([Box(lower=[lo], upper=[hi], coords=(0,))], action_box, s_t=s0, dynamics=dyn)
        tau = np.array([[s0, rng.normal()], [rng.normal(), rng.normal() * 2]])

        result = project(tau, spec)
        assert result.converged

        a_lo = max(-1.0, (lo - a * s0) / b)
        a_hi = min(1.0, (hi - a * s0) / b)
        a_opt = np.clip((b * (tau[1, 0] - a * s0) + tau[0, 1]) / (b ** 2 + 1), a_lo, a_hi)
        tail = (np.clip(tau[1, 1], -1.0, 1.0) - tau[1, 1]) ** 2

        def cost(u):
            return (a * s0 + b * u - tau[1, 0]) ** 2 + (u - tau[0, 1]) ** 2 + tail

        assert result.cost == pytest.approx(cost(a_opt), abs=1e-6)
        feasible = grid[(grid >= a_lo) & (grid <= a_hi)]
        assert result.cost <= cost(feasible).min() + 1e-6
        assert result.cost >= cost(feasible).min() - 1e-3


def test_output_satisfies_dynamics_and_constraints():
    spec = planar_spec()
    rng = np.random.default_rng(3)
    for _ in range(10):
        tau = rng.normal(size=(5, 6))
        result = project(tau, spec)
        if not result.converged:
            continue
        out = result.trajectory
        np.testing.assert_array_equal(out[0, :4], spec.s_t)
        assert spec.dynamics.residual(out[:, :4], out[:, 4:]) <= 1e-8
        assert max_violation(out, spec.constraints, 4) <= 1e-6


def test_projection_is_idempotent():
    spec = planar_spec()
    rng = np.random.default_rng(4)
    tau = rng.normal(size=(5, 6)) * 0.5
    first = project(tau, spec)
    assert first.converged
    second = project(first.trajectory, spec)
    np.testing.assert_allclose(second.trajectory, first.trajectory, atol=1e-6)
    assert second.cost <= 1e-10


def test_infeasible_set_is_reported():
    """s_1 >= 2 with |a| <= 1 from s_0 = 0"""
    spec = scalar_spec([Halfspace(normal=[-1.0], offset=-2.0, coords=(0,))],
                       Box(lower=[-1.0], upper=[1.0], coords=(0,)))
    try:
        result = ModelBasedProjector().project(np.zeros((2, 2)), spec)
    except InfeasibleProjectionError as e:
        assert e.code == "INFEASIBLE"
    else:
        assert not result.converged


def test_whole_space_is_identity():
    spec = FeasibleSetSpec.whole_space(np.zeros(4), 3)
    tau = np.random.default_rng(5).normal(size=(4, 6))
    result = project(tau, spec)
    np.testing.assert_array_equal(result.trajectory, tau)
    assert result.cost == 0.0
    assert projection_cost(tau, spec) == 0.0


def test_model_based_projection_needs_dynamics():
    spec = planar_spec().model_free()
    with pytest.raises(InvalidArgumentError):
        project_model_based(np.zeros((5, 6)), spec)
    with pytest.raises(InvalidArgumentError):
        FeasibleSetSpec(StageConstraintSet.whole_space(2), np.zeros(4), None, use_dynamics=True)


def test_project_batch_keeps_order():
    spec = planar_spec()
    rng = np.random.default_rng(6)
    batch = [rng.normal(size=(5, 6)) for _ in range(3)]
    results = project_batch(batch, spec)
    assert len(results) == 3
    for tau, result in zip(batch, results):
        assert result.cost == pytest.approx(float(np.sum((result.trajectory - tau) ** 2)))


def test_point_projections():
    disk = AvoidDisk(center=[0.0, 0.0], radius=0.5)
    # the centre is pushed along +x
    np.testing.assert_allclose(project_point(np.zeros(2), disk), [0.5, 0.0])
    np.testing.assert_allclose(project_point(np.array([0.0, 0.1]), disk), [0.0, 0.5])
    np.testing.assert_allclose(project_point(np.array([1.0, 1.0]), disk), [1.0, 1.0])

    box = Box(lower=[-1.0, -1.0], upper=[1.0, 1.0], coords=(0, 1))
    np.testing.assert_allclose(project_point(np.array([2.0, -3.0]), box), [1.0, -1.0])

    halfspace = Halfspace(normal=[1.0, 1.0], offset=0.0, coords=(0, 1))
    np.testing.assert_allclose(project_point(np.array([1.0, 1.0]), halfspace), [0.0, 0.0])


def test_model_free_projection_ignores_dynamics():
    spec = planar_spec().model_free()
    tau = np.zeros((5, 6))
    tau[:, 0] = 0.9
    tau[:, 4] = 3.0
    tau[0, :4] = 0.7
    result = project_model_free(tau, spec)
    assert result.status == "model-free"
    assert result.converged
    np.testing.assert_array_equal(result.trajectory[0, :4], spec.s_t)
    np.testing.assert_allclose(result.trajectory[1:, 0], 0.5)
    np.testing.assert_allclose(result.trajectory[:, 4], 1.0)
    assert result.cost == pytest.approx(float(np.sum((result.trajectory - tau) ** 2)))


def test_solver_options_from_dict():
    options = SolverOptions.from_dict({'max_iter': 10, 'retry': False})
    assert options.max_iter == 10
    assert options.retry is False
    assert options.feasibility_tol == 1e-6
    assert SolverOptions.from_dict(None).ftol == 1e-10


PLANAR_STEP = 0.5
PLANAR = NominalDynamics(A=np.eye(2), B=PLANAR_STEP * np.eye(2), c=np.zeros(2))


def nearest_feasible(point, G, h, tol=1e-9):
    """Closest point of {x : G x <= h} in the plane, by enumerating active sets of size <= 2"""
    best, best_dist = None, np.inf
    for size in range(3):
        for active in combinations(range(len(h)), size):
            x = point.copy()
            if active:
                Ga = G[list(active)]
                gram = Ga @ Ga.T
                if abs(np.linalg.det(gram)) < 1e-12:
                    continue
                x = point - Ga.T @ np.linalg.solve(gram, Ga @ point - h[list(active)])
            if np.all(G @ x <= h + tol):
                dist = float(np.sum((x - point) ** 2))
                if dist < best_dist:
                    best, best_dist = x, dist
    return best


def one_step_oracle(tau, s0, halfspaces, state_box=None, action_limit=None):
    """Optimal projection cost for s_1 = s_0 + t a_0 with linear stage-1 constraints.

    The cost in a_0 is isotropic, so the optimum is the Euclidean projection of
    its unconstrained minimizer onto the feasible polygon.
    """
    t = PLANAR_STEP
    rows, rhs = [], []
    for n, b in halfspaces:
        rows.append(t * n)
        rhs.append(b - n @ s0)
    if state_box is not None:
        lower, upper = state_box
        rows.extend(t * np.eye(2))
        rhs.extend(upper - s0)
        rows.extend(-t * np.eye(2))
        rhs.extend(s0 - lower)
    if action_limit is not None:
        rows.extend(np.eye(2))
        rows.extend(-np.eye(2))
        rhs.extend([action_limit] * 4)
    G, h = np.asarray(rows), np.asarray(rhs)

    s1_hat, a0_hat, a1_hat = tau[1, :2], tau[0, 2:], tau[1, 2:]
    free = (t * (s1_hat - s0) + a0_hat) / (t ** 2 + 1)
    a0 = nearest_feasible(free, G, h)
    a1 = a1_hat if action_limit is None else np.clip(a1_hat, -action_limit, action_limit)
    return float(np.sum((s0 + t * a0 - s1_hat) ** 2) + np.sum((a0 - a0_hat) ** 2) + np.sum((a1 - a1_hat) ** 2))


def random_instance(rng):
    s0 = rng.uniform(-0.5, 0.5, size=2)
    s1_feasible = s0 + PLANAR_STEP * rng.uniform(-0.8, 0.8, size=2)
    tau = rng.normal(size=(2, 4))
    tau[0, :2] = s0
    return s0, s1_feasible, tau


def random_halfspace(rng, through):
    n = rng.normal(size=2)
    n /= np.linalg.norm(n)
    return n, float(n @ through + rng.uniform(0.0, 0.3))


def test_planar_box_and_halfspace_projections_match_oracle():
    """200 one-step planar problems with a state box, a halfspace and an action box"""
    rng = np.random.default_rng(11)
    action_box = Box(lower=[-1.0, -1.0], upper=[1.0, 1.0], coords=(0, 1))
    start = time.perf_counter()
    for _ in range(200):
        s0, s1, tau = random_instance(rng)
        lower = s1 - rng.uniform(0.05, 0.4, size=2)
        upper = s1 + rng.uniform(0.05, 0.4, size=2)
        n, b = random_halfspace(rng, s1)
        constraints = StageConstraintSet.time_invariant(
            [Box(lower=lower, upper=upper, coords=(0, 1)), Halfspace(normal=n, offset=b, coords=(0, 1))],
            1, action_box
        )
        result = project(tau, FeasibleSetSpec(constraints, s0, PLANAR))
        assert result.converged
        expected = one_step_oracle(tau, s0, [(n, b)], (lower, upper), action_limit=1.0)
        assert result.cost == pytest.approx(expected, abs=1e-3)
    assert time.perf_counter() - start < 10.0


@pytest.mark.parametrize("count", [1, 2, 3])
def test_halfspace_projections_match_active_set_enumeration(count):
    rng = np.random.default_rng(20 + count)
    for _ in range(50):
        s0, s1, tau = random_instance(rng)
        halfspaces = [random_halfspace(rng, s1) for _ in range(count)]
        constraints = StageConstraintSet.time_invariant(
            [Halfspace(normal=n, offset=b, coords=(0, 1)) for n, b in halfspaces], 1
        )
        result = project(tau, FeasibleSetSpec(constraints, s0, PLANAR))
        assert result.converged
        assert result.cost == pytest.approx(one_step_oracle(tau, s0, halfspaces), abs=1e-6)


def test_projection_cost_grows_with_tightening():
    raw = StageConstraintSet.time_invariant(
        [Halfspace(normal=[1.0, 0.0], offset=0.3, coords=(0, 1)),
         Halfspace(normal=[0.0, -1.0], offset=0.2, coords=(0, 1)),
         Box(lower=[-1.0, -1.0], upper=[1.0, 1.0], coords=(0, 1))],
        3,
        Box(lower=[-1.0, -1.0], upper=[1.0, 1.0], coords=(0, 1))
    )
    dynamics = NominalDynamics.euler(PLANAR_STEP)
    rng = np.random.default_rng(30)
    for _ in range(10):
        tau = rng.normal(size=(4, 6)) * 0.8
        tau[0, :4] = 0.0
        costs = []
        for gamma in (0.0, 0.05, 0.1, 0.2):
            result = project(tau, FeasibleSetSpec(tighten(raw, gamma), np.zeros(4), dynamics))
            assert result.converged
            costs.append(result.cost)
        assert all(b >= a - 1e-7 for a, b in zip(costs, costs[1:]))
