from dataclasses import dataclass
import numpy as np

from ..errors import InvalidArgumentError


@dataclass(frozen=True, eq=False)
class NominalDynamics:
    """Affine nominal model s' = A s + B a + c.

    In raw units the environment model is the Euler map with A = I,
    B = [I; I] t_s and c = 0. Normalization turns it into a general affine
    map, so the projection only ever sees this form.
    """
    A: np.ndarray
    B: np.ndarray
    c: np.ndarray
    t_s: float = 0.0

    def __post_init__(self):
        A = np.atleast_2d(np.asarray(self.A, dtype=float))
        B = np.atleast_2d(np.asarray(self.B, dtype=float))
        c = np.asarray(self.c, dtype=float).reshape(-1)
        if A.shape[0] != A.shape[1] or B.shape[0] != A.shape[0] or c.size != A.shape[0]:
            raise InvalidArgumentError(
                "inconsistent dynamics shapes",
                {'A': list(A.shape), 'B': list(B.shape), 'c': [c.size]}
            )
        for arr in (A, B, c):
            arr.setflags(write=False)
        object.__setattr__(self, 'A', A)
        object.__setattr__(self, 'B', B)
        object.__setattr__(self, 'c', c)

    @property
    def d_s(self) -> int:
        return self.A.shape[0]

    @property
    def d_a(self) -> int:
        return self.B.shape[1]

    @classmethod
    def euler(cls, t_s: float, d_pos: int = 2) -> 'NominalDynamics':
        """Point-mass model: both actual and desired position integrate the action"""
        if t_s <= 0:
            raise InvalidArgumentError("sampling time must be positive", {'t_s': t_s})
        eye = np.eye(d_pos)
        return cls(
            A=np.eye(2 * d_pos),
            B=np.vstack([eye, eye]) * t_s,
            c=np.zeros(2 * d_pos),
            t_s=t_s
        )

    def step(self, s: np.ndarray, a: np.ndarray) -> np.ndarray:
        """Works on single vectors and on (N, d) batches"""
        s = np.asarray(s, dtype=float)
        a = np.asarray(a, dtype=float)
        return s @ self.A.T + a @ self.B.T + self.c

    def rollout(self, s0: np.ndarray, actions: np.ndarray) -> np.ndarray:
        """States s_0..s_n for actions a_0..a_{n-1}"""
        states = [np.asarray(s0, dtype=float)]
        for a in np.asarray(actions, dtype=float):
            states.append(self.step(states[-1], a))
        return np.stack(states)

    def condensed(self, horizon: int):
        """Stacked states s_1..s_H as G u + F s_0 + h, u = (a_0, ..., a_{H-1}).

        Returns (G, F, h) with G of shape (H d_s, H d_a).
        """
        d_s, d_a = self.d_s, self.d_a
        G = np.zeros((horizon * d_s, horizon * d_a))
        F = np.zeros((horizon * d_s, d_s))
        h = np.zeros(horizon * d_s)

        power = np.eye(d_s)
        offset = np.zeros(d_s)
        for i in range(horizon):
            # s_{i+1} = A^{i+1} s_0 + sum_j A^{i-j} (B a_j + c)
            offset = self.A @ offset + self.c
            power = self.A @ power
            rows = slice(i * d_s, (i + 1) * d_s)
            F[rows] = power
            h[rows] = offset
            A_pow = np.eye(d_s)
            for j in range(i, -1, -1):
                G[rows, j * d_a:(j + 1) * d_a] = A_pow @ self.B
                A_pow = self.A @ A_pow
        return G, F, h

    def residual(self, states: np.ndarray, actions: np.ndarray) -> float:
        """Largest violation of the recursion along a trajectory"""
        states = np.asarray(states, dtype=float)
        actions = np.asarray(actions, dtype=float)
        if states.shape[0] < 2:
            return 0.0
        predicted = self.step(states[:-1], actions[:-1])
        return float(np.max(np.abs(states[1:] - predicted)))

