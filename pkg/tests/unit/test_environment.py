import numpy as np
import pytest

from diffusion_mpc.config.settings import load_settings
from diffusion_mpc.core.data_model import ConstraintSuite, Halfspace
from diffusion_mpc.core.normalization import normalize_primitives, normalizer_fit
from diffusion_mpc.environment.constraint_suites import (
    action_box_from_demos, has_corridor, novel_constraint_suite, satisfaction_fraction, suite_statistics
)
from diffusion_mpc.environment.expert import ExpertPolicy, all_routes, generate_demos, route_histogram
from diffusion_mpc.environment.mismatch import DisturbanceModel, estimate_gamma, rollout_mismatch
from diffusion_mpc.environment.plant import EnvConfig, PointMassPlant, env_step, goal_indicator
from diffusion_mpc.errors import ConfigurationError, InvalidArgumentError
from diffusion_mpc.harness.dataset import training_arrays
from diffusion_mpc.harness.evaluation import resolve_gamma
from diffusion_mpc.projection.tightening import tighten_primitives
from diffusion_mpc.projection.violations import violation_report


def test_plant_step_hand_computed():
    """p = (0, 0), d = (0.1, 0), a = 0, k_p = 1, t_s = 0.1 -> p' = (0.01, 0)"""
    config = EnvConfig(k_p=1.0, t_s=0.1)
    out = env_step(np.array([0.0, 0.0, 0.1, 0.0]), np.zeros(2), config)
    np.testing.assert_allclose(out, [0.01, 0.0, 0.1, 0.0])


def test_plant_equilibrium_and_saturation():
    config = EnvConfig()
    s = np.array([0.2, 0.3, 0.2, 0.3])
    np.testing.assert_allclose(env_step(s, np.zeros(2), config), s)
    far = env_step(np.array([0.0, 0.0, 1.0, 0.0]), np.zeros(2), config)
    assert far[0] == pytest.approx(config.v_max * config.t_s)
    clipped = env_step(np.zeros(4), np.array([2.0, 0.0]), config)
    assert clipped[2] == pytest.approx(config.v_max * config.t_s)


def test_ideal_tracking_matches_the_nominal_model():
    config = EnvConfig(k_p=None)
    dynamics = config.nominal_dynamics()
    rng = np.random.default_rng(0)
    for _ in range(10):
        s = rng.uniform(-1, 1, size=4)
        a = rng.uniform(-0.4, 0.4, size=2)
        np.testing.assert_allclose(env_step(s, a, config), dynamics.step(s, a), atol=1e-15)


def test_goal_line_is_closed():
    assert goal_indicator(np.array([0.0, 0.9, 0.0, 0.0]), 0.9) == 1
    assert goal_indicator(np.array([0.0, 0.8999, 0.0, 0.0]), 0.9) == 0


def test_plant_stops_at_the_step_cap():
    plant = PointMassPlant(EnvConfig(max_steps=3), seed=0)
    while not plant.done:
        plant.step(np.zeros(2))
    assert plant.steps == 3


def test_invalid_environment():
    with pytest.raises(InvalidArgumentError):
        EnvConfig(k_p=-1.0)
    with pytest.raises(InvalidArgumentError):
        EnvConfig(goal_y=2.0)
    with pytest.raises(InvalidArgumentError):
        EnvConfig(obstacle_radius=2.0)


def test_demonstrations_cover_every_route(demos):
    config = EnvConfig()
    assert len(demos) == 8
    assert route_histogram(demos) == {route: 1 for route in all_routes(config)}
    for demo in demos:
        assert demo.states.shape[0] == demo.actions.shape[0]
        assert goal_indicator(demo.states[-1], config.goal_y)
        for s in demo.states:
            assert violation_report(s, config.obstacles).max() == 0.0
        assert np.all(np.abs(demo.actions) <= config.v_max)


def test_demo_count_must_balance_routes():
    with pytest.raises(InvalidArgumentError):
        generate_demos(EnvConfig(), 7)


def test_demo_generation_is_reproducible():
    config = EnvConfig()
    a = generate_demos(config, 8, seed=1)
    b = generate_demos(config, 8, seed=1)
    for x, y in zip(a, b):
        np.testing.assert_array_equal(x.states, y.states)


def test_expert_policy_picks_a_valid_route():
    policy = ExpertPolicy(EnvConfig(), seed=4)
    assert policy.route in all_routes(EnvConfig())
    with pytest.raises(InvalidArgumentError):
        ExpertPolicy(EnvConfig(), route='LX')


def test_gamma_vanishes_for_ideal_tracking(demos):
    config = EnvConfig(k_p=None, max_steps=40)
    normalizer = normalizer_fit(training_arrays(demos), state_dim=4)
    assert estimate_gamma(ExpertPolicy(config), config, normalizer, n_rollouts=2) == pytest.approx(0.0, abs=1e-12)


def test_gamma_bounds_the_observed_mismatch(demos):
    config = EnvConfig(max_steps=60)
    normalizer = normalizer_fit(training_arrays(demos), state_dim=4)
    policy = ExpertPolicy(config)
    trace = rollout_mismatch(policy, config, normalizer, seed=0)
    gamma_one = estimate_gamma(policy, config, normalizer, n_rollouts=1, seed=0)
    gamma_two = estimate_gamma(policy, config, normalizer, n_rollouts=2, seed=0)
    assert gamma_one == pytest.approx(1.1 * trace.max())
    assert gamma_two >= gamma_one > 0
    with pytest.raises(InvalidArgumentError):
        estimate_gamma(policy, config, normalizer, n_rollouts=0)


def test_default_gamma_covers_the_plant_mismatch(demos, checkpoint_factory):
    settings = load_settings('desk')
    assert settings.controller.gamma == 'auto'
    env = settings.env
    normalizer = normalizer_fit(training_arrays(demos), state_dim=4)
    rollouts = settings.experiment.gamma_rollouts
    gamma = resolve_gamma(settings.controller, checkpoint_factory(normalizer=normalizer), env, rollouts)
    assert gamma >= estimate_gamma(ExpertPolicy(env), env, normalizer, n_rollouts=rollouts) > 0

    fresh = np.concatenate([rollout_mismatch(ExpertPolicy(env), env, normalizer, seed=s) for s in range(100, 110)])
    assert np.mean(fresh <= gamma) >= 0.999


def test_adversarial_disturbance_has_norm_gamma(unit_normalizer):
    wall = Halfspace(normal=[1.0, 0.0], offset=0.3, coords=(0, 1))
    primitives = normalize_primitives([wall], unit_normalizer)
    model = DisturbanceModel(0.05, unit_normalizer, primitives)
    w = model(np.array([0.1, 0.0, 0.1, 0.0]))
    np.testing.assert_allclose(np.linalg.norm(w / unit_normalizer.scale[:4]), 0.05)
    # pushes towards the wall
    assert w[0] > 0
    random = DisturbanceModel(0.05, unit_normalizer, mode='random', seed=1)
    np.testing.assert_allclose(np.linalg.norm(random(np.zeros(4))), 0.05)
    with pytest.raises(InvalidArgumentError):
        DisturbanceModel(0.05, unit_normalizer, mode='gusty')


def test_default_suites_are_novel_and_passable(demos):
    """Each suite rules out most demonstrations but leaves a corridor to the goal"""
    settings = load_settings('desk')
    config = EnvConfig()
    assert len(settings.suites) == 3
    for suite in settings.suites:
        primitives = suite.all_primitives()
        untightened = satisfaction_fraction(demos, primitives)
        assert untightened < 0.15
        assert satisfaction_fraction(demos, tighten_primitives(primitives, 0.05)) <= untightened
        assert has_corridor(config, primitives)

    stats = suite_statistics(settings.suites, demos, margin=0.05)
    assert set(stats) == {s.name for s in settings.suites}
    sets = novel_constraint_suite(config, settings.suites, 7, demos=demos, margin=0.05)
    assert len(sets) == 3
    assert all(s.horizon == 7 for s in sets)
    box = action_box_from_demos(demos)
    np.testing.assert_array_equal(sets[0].action_box.upper, box.upper)


def test_blocking_suite_is_rejected():
    wall = ConstraintSuite(name='wall', primitives=(Halfspace(normal=[0.0, 1.0], offset=0.0, coords=(0, 1)),))
    config = EnvConfig()
    assert not has_corridor(config, wall.primitives)
    with pytest.raises(ConfigurationError):
        novel_constraint_suite(config, [wall], 7)
