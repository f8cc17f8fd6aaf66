from itertools import product
import logging
from typing import List, Optional, Sequence, Tuple

import numpy as np

from ..core.data_model import Demonstration
from ..errors import DemoGenerationError, InvalidArgumentError
from ..projection.violations import violation_report
from .plant import EnvConfig, PointMassPlant, goal_indicator

logger = logging.getLogger(__name__)

SIDES = {'L': -1.0, 'R': 1.0}


def all_routes(config: EnvConfig) -> List[str]:
    """Every left/right choice per obstacle row, bottom row first"""
    return [''.join(r) for r in product('LR', repeat=len(config.obstacle_rows))]


class ExpertPolicy:
    """Waypoint router with a speed-limited tracker on the desired position.

    Two waypoints pass each obstacle row on the chosen side, a final one
    sits beyond the goal line.
    """

    def __init__(self, config: EnvConfig, route: Optional[str] = None, seed: int = 0):
        self.config = config
        self.fixed_route = route
        self.reset(seed)

    def reset(self, seed: int = 0, route: Optional[str] = None) -> None:
        cfg = self.config
        rng = np.random.default_rng(seed)
        routes = all_routes(cfg)
        self.route = route or self.fixed_route or routes[int(rng.integers(len(routes)))]
        if len(self.route) != len(cfg.obstacle_rows) or set(self.route) - set(SIDES):
            raise InvalidArgumentError(f"Invalid route label: {self.route}")
        self.speed = cfg.v_nom + rng.uniform(-cfg.speed_jitter, cfg.speed_jitter)
        self.waypoints = self._waypoints(rng)
        self.target = 0

    def _waypoints(self, rng: np.random.Generator) -> List[np.ndarray]:
        cfg = self.config
        points = []
        for side, row in zip(self.route, cfg.obstacle_rows):
            x = SIDES[side] * cfg.pass_offset + rng.uniform(-cfg.waypoint_jitter, cfg.waypoint_jitter)
            points.append(np.array([x, row - cfg.pass_margin]))
            points.append(np.array([x, row + cfg.pass_margin]))
        final_x = SIDES[self.route[-1]] * cfg.final_x + rng.uniform(-cfg.waypoint_jitter, cfg.waypoint_jitter)
        points.append(np.array([final_x, cfg.final_y]))
        return points

    def __call__(self, state: np.ndarray) -> np.ndarray:
        cfg = self.config
        desired = np.asarray(state, dtype=float)[2:4]
        while self.target < len(self.waypoints) and \
                np.linalg.norm(self.waypoints[self.target] - desired) < cfg.waypoint_tolerance:
            self.target += 1
        if self.target >= len(self.waypoints):
            return np.array([0.0, self.speed])
        delta = self.waypoints[self.target] - desired
        dist = float(np.linalg.norm(delta))
        speed = min(self.speed, dist / cfg.t_s)
        return delta / max(dist, 1e-12) * speed


def run_expert(
    config: EnvConfig,
    route: str,
    seed: int
) -> Tuple[np.ndarray, np.ndarray, bool]:
    """One expert rollout; returns states, actions and whether it is a valid demo"""
    policy = ExpertPolicy(config, route, seed)
    plant = PointMassPlant(config, seed)
    states = [plant.state.copy()]
    actions = []
    obstacles = config.obstacles
    collided = False
    while not plant.done:
        action = policy(plant.state)
        actions.append(action)
        states.append(plant.step(action).copy())
        if violation_report(plant.state, obstacles).max() > 0:
            collided = True
            break
    actions.append(policy(plant.state))
    reached = bool(goal_indicator(plant.state, config.goal_y))
    return np.asarray(states), np.asarray(actions), reached and not collided


def generate_demos(config: EnvConfig, n: int, seed: int = 0) -> List[Demonstration]:
    """Balanced expert demonstrations, n / route_count per route"""
    routes = all_routes(config)
    if n < 1 or n % len(routes) != 0:
        raise InvalidArgumentError(
            f"number of demonstrations must be a positive multiple of {len(routes)}",
            {'n': n, 'routes': len(routes)}
        )
    per_route = n // len(routes)
    demos: List[Demonstration] = []
    for r, route in enumerate(routes):
        for i in range(per_route):
            base = seed * 1_000_003 + r * 10_007 + i * 101
            for attempt in range(config.demo_retries):
                demo_seed = base + attempt
                states, actions, valid = run_expert(config, route, demo_seed)
                if valid:
                    break
                logger.warning(f"Demo {route}/{i} attempt {attempt} invalid, regenerating")
            else:
                raise DemoGenerationError(
                    f"Could not generate a valid demonstration for route {route}",
                    {'route': route, 'index': i, 'retries': config.demo_retries}
                )
            demos.append(Demonstration(
                states=states,
                actions=actions,
                route_label=route,
                seed=demo_seed,
                metadata={'attempts': attempt + 1}
            ))
    logger.info(f"Generated {len(demos)} demonstrations over {len(routes)} routes")
    return demos


def route_histogram(demos: Sequence[Demonstration]) -> dict:
    counts: dict = {}
    for demo in demos:
        counts[demo.route_label] = counts.get(demo.route_label, 0) + 1
    return dict(sorted(counts.items()))
