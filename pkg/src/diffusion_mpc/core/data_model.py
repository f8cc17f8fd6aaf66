from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from ..errors import InvalidArgumentError


def _as_vector(values: Any, name: str) -> np.ndarray:
    vec = np.asarray(values, dtype=float).reshape(-1)
    if not np.all(np.isfinite(vec)):
        raise InvalidArgumentError(f"{name} must be finite", {name: vec.tolist()})
    vec.setflags(write=False)
    return vec


@dataclass(frozen=True, eq=False)
class Trajectory:
    """State-action trajectory of H+1 steps.

    Flattening is row-major over timesteps with the state before the action
    inside each timestep. Checkpoints and datasets depend on this order.
    """
    states: np.ndarray
    actions: np.ndarray
    t: int = 0

    def __post_init__(self):
        states = np.array(self.states, dtype=float, ndmin=2)
        actions = np.array(self.actions, dtype=float, ndmin=2)
        if states.shape[0] != actions.shape[0]:
            raise InvalidArgumentError(
                "states and actions must have the same number of rows",
                {'states': list(states.shape), 'actions': list(actions.shape)}
            )
        if not (np.all(np.isfinite(states)) and np.all(np.isfinite(actions))):
            raise InvalidArgumentError("trajectory entries must be finite")
        states.setflags(write=False)
        actions.setflags(write=False)
        object.__setattr__(self, 'states', states)
        object.__setattr__(self, 'actions', actions)

    @property
    def horizon(self) -> int:
        return self.states.shape[0] - 1

    @property
    def state_dim(self) -> int:
        return self.states.shape[1]

    @property
    def action_dim(self) -> int:
        return self.actions.shape[1]

    def as_array(self) -> np.ndarray:
        """(H+1, d_s + d_a) view used by the diffusion model"""
        return np.concatenate([self.states, self.actions], axis=1)

    def flatten(self) -> np.ndarray:
        return self.as_array().reshape(-1)

    @classmethod
    def from_array(cls, array: np.ndarray, state_dim: int, t: int = 0) -> 'Trajectory':
        array = np.asarray(array, dtype=float)
        return cls(states=array[:, :state_dim], actions=array[:, state_dim:], t=t)

    @classmethod
    def unflatten(cls, flat: np.ndarray, state_dim: int, action_dim: int, t: int = 0) -> 'Trajectory':
        flat = np.asarray(flat, dtype=float).reshape(-1)
        width = state_dim + action_dim
        if flat.size % width != 0:
            raise InvalidArgumentError(
                "flat trajectory length is not a multiple of d_s + d_a",
                {'length': int(flat.size), 'width': width}
            )
        return cls.from_array(flat.reshape(-1, width), state_dim, t)

    def to_dict(self) -> Dict[str, Any]:
        return {
            't': self.t,
            'states': self.states.tolist(),
            'actions': self.actions.tolist()
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'Trajectory':
        return cls(
            states=data['states'],
            actions=data['actions'],
            t=int(data.get('t', 0))
        )


@dataclass(frozen=True, eq=False)
class Halfspace:
    """a . x[coords] <= b"""
    normal: np.ndarray
    offset: float
    coords: Tuple[int, ...]

    def __post_init__(self):
        normal = _as_vector(self.normal, 'normal')
        if normal.size != len(self.coords):
            raise InvalidArgumentError("halfspace normal must match its coordinates")
        if np.linalg.norm(normal) == 0.0:
            raise InvalidArgumentError("halfspace normal must be non-zero")
        object.__setattr__(self, 'normal', normal)
        object.__setattr__(self, 'offset', float(self.offset))
        object.__setattr__(self, 'coords', tuple(int(c) for c in self.coords))

    kind = 'halfspace'

    def to_dict(self) -> Dict[str, Any]:
        return {'type': self.kind, 'normal': self.normal.tolist(),
                'offset': self.offset, 'coords': list(self.coords)}


@dataclass(frozen=True, eq=False)
class Box:
    lower: np.ndarray
    upper: np.ndarray
    coords: Tuple[int, ...]

    def __post_init__(self):
        lower = _as_vector(self.lower, 'lower')
        upper = _as_vector(self.upper, 'upper')
        if lower.size != upper.size or lower.size != len(self.coords):
            raise InvalidArgumentError("box bounds must match its coordinates")
        if np.any(lower > upper):
            raise InvalidArgumentError(
                "box lower bound exceeds upper bound",
                {'lower': lower.tolist(), 'upper': upper.tolist()}
            )
        object.__setattr__(self, 'lower', lower)
        object.__setattr__(self, 'upper', upper)
        object.__setattr__(self, 'coords', tuple(int(c) for c in self.coords))

    kind = 'box'

    def to_dict(self) -> Dict[str, Any]:
        return {'type': self.kind, 'lower': self.lower.tolist(),
                'upper': self.upper.tolist(), 'coords': list(self.coords)}


@dataclass(frozen=True, eq=False)
class AvoidDisk:
    """Keep-out disk: ||x[coords] - center|| >= radius"""
    center: np.ndarray
    radius: float
    coords: Tuple[int, int] = (0, 1)

    def __post_init__(self):
        center = _as_vector(self.center, 'center')
        if center.size != 2 or len(self.coords) != 2:
            raise InvalidArgumentError("avoid-disk is defined on a coordinate pair")
        if not self.radius > 0:
            raise InvalidArgumentError("avoid-disk radius must be positive", {'radius': self.radius})
        object.__setattr__(self, 'center', center)
        object.__setattr__(self, 'radius', float(self.radius))
        object.__setattr__(self, 'coords', tuple(int(c) for c in self.coords))

    kind = 'disk'

    def to_dict(self) -> Dict[str, Any]:
        return {'type': self.kind, 'center': self.center.tolist(),
                'radius': self.radius, 'coords': list(self.coords)}


ConstraintPrimitive = Union[Halfspace, Box, AvoidDisk]


def primitive_from_dict(data: Dict[str, Any]) -> ConstraintPrimitive:
    """Build a primitive from its declarative form"""
    kind = data.get('type')
    coords = tuple(data.get('coords', (0, 1)))
    if kind == 'halfspace':
        return Halfspace(normal=data['normal'], offset=data['offset'], coords=coords)
    if kind == 'box':
        return Box(lower=data['lower'], upper=data['upper'], coords=coords)
    if kind == 'disk':
        return AvoidDisk(center=data['center'], radius=data['radius'], coords=coords)
    raise InvalidArgumentError(f"Unknown constraint type: {kind}")


@dataclass(frozen=True)
class StageConstraintSet:
    """Per-step state constraints for indices 0..H plus an action box.

    ``action_box`` may be None only for the unconstrained whole space.
    """
    state_constraints: Tuple[Tuple[ConstraintPrimitive, ...], ...]
    action_box: Optional[Box] = None

    def __post_init__(self):
        stages = tuple(tuple(stage) for stage in self.state_constraints)
        if not stages:
            raise InvalidArgumentError("constraint set needs at least one stage")
        object.__setattr__(self, 'state_constraints', stages)

    @property
    def horizon(self) -> int:
        return len(self.state_constraints) - 1

    @property
    def is_whole_space(self) -> bool:
        return self.action_box is None and not any(self.state_constraints)

    @classmethod
    def time_invariant(
        cls,
        primitives: Sequence[ConstraintPrimitive],
        horizon: int,
        action_box: Optional[Box] = None
    ) -> 'StageConstraintSet':
        return cls(
            state_constraints=tuple(tuple(primitives) for _ in range(horizon + 1)),
            action_box=action_box
        )

    @classmethod
    def whole_space(cls, horizon: int) -> 'StageConstraintSet':
        return cls(state_constraints=tuple(() for _ in range(horizon + 1)))

    def with_action_box(self, action_box: Optional[Box]) -> 'StageConstraintSet':
        return StageConstraintSet(self.state_constraints, action_box)

    def to_dict(self) -> Dict[str, Any]:
        return {
            'stages': [[p.to_dict() for p in stage] for stage in self.state_constraints],
            'action_box': self.action_box.to_dict() if self.action_box else None
        }


@dataclass(frozen=True)
class ConstraintSuite:
    """Named test-time constraint formulation in raw units.

    ``primitives`` hold for every predicted step; ``stages`` optionally
    overrides that with an explicit per-step list.
    """
    name: str
    primitives: Tuple[ConstraintPrimitive, ...] = ()
    stages: Optional[Tuple[Tuple[ConstraintPrimitive, ...], ...]] = None

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'ConstraintSuite':
        stages = data.get('stages')
        return cls(
            name=data['name'],
            primitives=tuple(primitive_from_dict(p) for p in data.get('primitives', [])),
            stages=tuple(
                tuple(primitive_from_dict(p) for p in stage) for stage in stages
            ) if stages else None
        )

    def all_primitives(self) -> List[ConstraintPrimitive]:
        if self.stages is None:
            return list(self.primitives)
        seen: List[ConstraintPrimitive] = []
        for stage in self.stages:
            seen.extend(p for p in stage if p not in seen)
        return seen

    def stage_set(self, horizon: int, action_box: Optional[Box] = None) -> StageConstraintSet:
        if self.stages is None:
            return StageConstraintSet.time_invariant(self.primitives, horizon, action_box)
        stages = list(self.stages)[:horizon + 1]
        while len(stages) < horizon + 1:
            stages.append(stages[-1])
        return StageConstraintSet(tuple(stages), action_box)

    def to_dict(self) -> Dict[str, Any]:
        data: Dict[str, Any] = {
            'name': self.name,
            'primitives': [p.to_dict() for p in self.primitives]
        }
        if self.stages is not None:
            data['stages'] = [[p.to_dict() for p in stage] for stage in self.stages]
        return data


@dataclass
class Demonstration:
    """One expert run in raw units"""
    states: np.ndarray
    actions: np.ndarray
    route_label: str
    seed: int
    metadata: Dict[str, Any] = field(default_factory=dict)

    @property
    def length(self) -> int:
        return int(self.states.shape[0])

    def to_dict(self) -> Dict[str, Any]:
        return {
            'route_label': self.route_label,
            'seed': self.seed,
            'states': np.asarray(self.states).tolist(),
            'actions': np.asarray(self.actions).tolist(),
            'metadata': self.metadata
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'Demonstration':
        return cls(
            states=np.asarray(data['states'], dtype=float),
            actions=np.asarray(data['actions'], dtype=float),
            route_label=str(data['route_label']),
            seed=int(data.get('seed', 0)),
            metadata=data.get('metadata', {}) or {}
        )
