from typing import Optional, Sequence

import numpy as np

from ..errors import InvalidArgumentError
from .settings import ControllerState, Criterion


def _eligible(batch_size: int, converged: Optional[Sequence[bool]]) -> np.ndarray:
    """Candidates whose projections all converged, or everyone if none did"""
    if converged is None:
        return np.arange(batch_size)
    flags = np.asarray(converged, dtype=bool)
    return np.flatnonzero(flags) if flags.any() else np.arange(batch_size)


def temporal_distances(batch: np.ndarray, previous: np.ndarray) -> np.ndarray:
    """||candidate[0:H] - previous[1:H+1]||: both cover the same wall-clock steps"""
    overlap = previous[1:]
    return np.linalg.norm((batch[:, :-1] - overlap[None]).reshape(batch.shape[0], -1), axis=1)


def select_trajectory(
    batch: np.ndarray,
    criterion: Criterion,
    state: ControllerState,
    costs: Optional[Sequence[float]] = None,
    rng: Optional[np.random.Generator] = None,
    converged: Optional[Sequence[bool]] = None
) -> int:
    """Index of the candidate to execute.

    random: uniform draw; temporal: closest to the previous plan (random on
    the first step); cost: smallest cumulative projection cost. Ties go to
    the lowest index.
    """
    batch = np.asarray(batch, dtype=float)
    if batch.ndim != 3 or batch.shape[0] == 0:
        raise InvalidArgumentError("selection needs a non-empty (B, H+1, d) batch")
    criterion = Criterion(criterion)
    pool = _eligible(batch.shape[0], converged)

    if criterion is Criterion.COST:
        if costs is None:
            raise InvalidArgumentError("cost-based selection needs per-candidate costs")
        scores = np.asarray(costs, dtype=float)[pool]
        return int(pool[int(np.argmin(scores))])

    if criterion is Criterion.TEMPORAL and state.previous is not None:
        scores = temporal_distances(batch[pool], state.previous)
        return int(pool[int(np.argmin(scores))])

    rng = rng if rng is not None else np.random.default_rng()
    return int(pool[int(rng.integers(len(pool)))])
