from dataclasses import dataclass
from typing import Any, Dict, Iterable, Optional, Sequence, Tuple, Union

import numpy as np

from ..errors import InvalidArgumentError
from .data_model import (
    AvoidDisk, Box, ConstraintPrimitive, Halfspace, StageConstraintSet, Trajectory
)
from .dynamics import NominalDynamics

DEGENERATE_PAD = 1e-6
POSITION_GROUPS: Tuple[Tuple[int, ...], ...] = ((0, 1), (2, 3))

ArrayLike = Union[np.ndarray, Trajectory]


@dataclass(frozen=True, eq=False)
class Normalizer:
    """Limit normalization to [-1, 1] over the trajectory columns (states, then actions).

    Columns listed together in ``groups`` share one scale so that disks on
    those coordinates stay disks after normalization.
    """
    lower: np.ndarray
    upper: np.ndarray
    state_dim: int
    groups: Tuple[Tuple[int, ...], ...] = POSITION_GROUPS

    def __post_init__(self):
        lower = np.asarray(self.lower, dtype=float).reshape(-1)
        upper = np.asarray(self.upper, dtype=float).reshape(-1)
        if lower.shape != upper.shape or np.any(upper <= lower):
            raise InvalidArgumentError(
                "normalizer needs upper > lower in every dimension",
                {'lower': lower.tolist(), 'upper': upper.tolist()}
            )
        lower.setflags(write=False)
        upper.setflags(write=False)
        object.__setattr__(self, 'lower', lower)
        object.__setattr__(self, 'upper', upper)
        object.__setattr__(self, 'groups', tuple(tuple(int(i) for i in g) for g in self.groups))

    @property
    def scale(self) -> np.ndarray:
        return (self.upper - self.lower) / 2.0

    @property
    def mid(self) -> np.ndarray:
        return (self.upper + self.lower) / 2.0

    @property
    def action_dim(self) -> int:
        return self.lower.size - self.state_dim

    def _columns(self, kind: str) -> slice:
        if kind == 'state':
            return slice(0, self.state_dim)
        if kind == 'action':
            return slice(self.state_dim, None)
        return slice(None)

    def normalize(self, x: ArrayLike, kind: str = 'trajectory') -> ArrayLike:
        if isinstance(x, Trajectory):
            return Trajectory.from_array(self.normalize(x.as_array()), self.state_dim, x.t)
        cols = self._columns(kind)
        return (np.asarray(x, dtype=float) - self.mid[cols]) / self.scale[cols]

    def denormalize(self, x: ArrayLike, kind: str = 'trajectory') -> ArrayLike:
        if isinstance(x, Trajectory):
            return Trajectory.from_array(self.denormalize(x.as_array()), self.state_dim, x.t)
        cols = self._columns(kind)
        return np.asarray(x, dtype=float) * self.scale[cols] + self.mid[cols]

    def normalize_dynamics(self, dynamics: NominalDynamics) -> NominalDynamics:
        """Affine image of s' = A s + B a + c in normalized coordinates"""
        D_s = self.scale[:self.state_dim]
        D_a = self.scale[self.state_dim:]
        m_s = self.mid[:self.state_dim]
        m_a = self.mid[self.state_dim:]
        A = dynamics.A * D_s[None, :] / D_s[:, None]
        B = dynamics.B * D_a[None, :] / D_s[:, None]
        c = (dynamics.A @ m_s + dynamics.B @ m_a + dynamics.c - m_s) / D_s
        return NominalDynamics(A=A, B=B, c=c, t_s=dynamics.t_s)

    def to_dict(self) -> Dict[str, Any]:
        return {
            'lower': self.lower.tolist(),
            'upper': self.upper.tolist(),
            'state_dim': self.state_dim,
            'groups': [list(g) for g in self.groups]
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'Normalizer':
        return cls(
            lower=data['lower'],
            upper=data['upper'],
            state_dim=int(data['state_dim']),
            groups=tuple(tuple(g) for g in data.get('groups', POSITION_GROUPS))
        )


def normalizer_fit(
    dataset: Iterable[ArrayLike],
    state_dim: Optional[int] = None,
    groups: Sequence[Sequence[int]] = POSITION_GROUPS,
    pad: float = DEGENERATE_PAD
) -> Normalizer:
    """Fit per-dimension dataset limits.

    ``dataset`` holds raw Trajectory objects or (T, d_s + d_a) arrays; for
    arrays ``state_dim`` must be given.
    """
    rows = []
    for item in dataset:
        if isinstance(item, Trajectory):
            state_dim = item.state_dim if state_dim is None else state_dim
            rows.append(item.as_array())
        else:
            rows.append(np.atleast_2d(np.asarray(item, dtype=float)))
    if not rows:
        raise InvalidArgumentError("cannot fit a normalizer on an empty dataset")
    if state_dim is None:
        raise InvalidArgumentError("state_dim is required for array datasets")

    data = np.concatenate(rows, axis=0)
    lo = data.min(axis=0)
    hi = data.max(axis=0)
    degenerate = (hi - lo) < pad
    lo = np.where(degenerate, lo - pad, lo)
    hi = np.where(degenerate, hi + pad, hi)

    mid = (hi + lo) / 2.0
    half = (hi - lo) / 2.0
    for group in groups:
        idx = [i for i in group if i < state_dim]
        if idx:
            half[idx] = half[idx].max()
    return Normalizer(lower=mid - half, upper=mid + half, state_dim=state_dim, groups=tuple(map(tuple, groups)))


def _normalize_primitive(
    primitive: ConstraintPrimitive,
    mid: np.ndarray,
    scale: np.ndarray
) -> ConstraintPrimitive:
    coords = list(primitive.coords)
    if isinstance(primitive, Halfspace):
        # a . (D x_n + m) <= b
        return Halfspace(
            normal=primitive.normal * scale[coords],
            offset=primitive.offset - float(primitive.normal @ mid[coords]),
            coords=primitive.coords
        )
    if isinstance(primitive, Box):
        return Box(
            lower=(primitive.lower - mid[coords]) / scale[coords],
            upper=(primitive.upper - mid[coords]) / scale[coords],
            coords=primitive.coords
        )
    if isinstance(primitive, AvoidDisk):
        pair_scale = scale[coords]
        if not np.isclose(pair_scale[0], pair_scale[1], rtol=1e-12, atol=0.0):
            raise InvalidArgumentError(
                "avoid-disk coordinates must share one normalization scale",
                {'coords': coords, 'scale': pair_scale.tolist()}
            )
        return AvoidDisk(
            center=(primitive.center - mid[coords]) / pair_scale[0],
            radius=primitive.radius / pair_scale[0],
            coords=primitive.coords
        )
    raise InvalidArgumentError(f"Unsupported primitive: {type(primitive).__name__}")


def normalize_primitives(
    primitives: Iterable[ConstraintPrimitive],
    normalizer: Normalizer,
    kind: str = 'state'
) -> Tuple[ConstraintPrimitive, ...]:
    cols = normalizer._columns(kind)
    mid = normalizer.mid[cols]
    scale = normalizer.scale[cols]
    return tuple(_normalize_primitive(p, mid, scale) for p in primitives)


def normalize_constraints(constraints: StageConstraintSet, normalizer: Normalizer) -> StageConstraintSet:
    """Affine image of a raw constraint set; membership is preserved exactly"""
    stages = tuple(normalize_primitives(stage, normalizer, 'state') for stage in constraints.state_constraints)
    action_box = None
    if constraints.action_box is not None:
        action_box = normalize_primitives([constraints.action_box], normalizer, 'action')[0]
    return StageConstraintSet(stages, action_box)
