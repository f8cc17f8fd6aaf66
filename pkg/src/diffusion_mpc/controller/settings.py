from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, Optional, Union

import numpy as np

from ..errors import InvalidArgumentError
from ..projection.solver import SolverOptions


class Method(str, Enum):
    DPCC_R = "dpcc-r"
    DPCC_T = "dpcc-t"
    DPCC_C = "dpcc-c"
    DIFFUSER = "diffuser"
    GUIDANCE = "guidance"
    POST_PROCESSING = "post-processing"
    MODEL_FREE = "model-free"

    @property
    def is_dpcc(self) -> bool:
        return self in (Method.DPCC_R, Method.DPCC_T, Method.DPCC_C)

    @property
    def projects_while_denoising(self) -> bool:
        return self.is_dpcc or self is Method.MODEL_FREE


class Criterion(str, Enum):
    RANDOM = "random"
    TEMPORAL = "temporal"
    COST = "cost"


SELECTION = {
    Method.DPCC_R: Criterion.RANDOM,
    Method.DPCC_T: Criterion.TEMPORAL,
    Method.DPCC_C: Criterion.COST,
}


def parse_method(name: str) -> Method:
    """Accepts plain names and table labels such as ``guidance:w=10``"""
    base = str(name).split(':', 1)[0].strip().lower()
    try:
        return Method(base)
    except ValueError:
        valid = ', '.join(m.value for m in Method)
        raise InvalidArgumentError(f"Unknown method '{name}' (expected one of: {valid})")


@dataclass
class ControllerConfig:
    method: Method = Method.DPCC_C
    batch_size: int = 4
    tightening: bool = True
    gamma: Union[float, str] = 'auto'
    guidance_weight: float = 1.0
    diffusion_steps: Optional[int] = None
    horizon: Optional[int] = None
    solver: SolverOptions = field(default_factory=SolverOptions)
    diagnostics: bool = True

    def __post_init__(self):
        self.method = parse_method(self.method) if not isinstance(self.method, Method) else self.method
        if self.batch_size < 1:
            raise InvalidArgumentError("batch size must be >= 1", {'batch_size': self.batch_size})
        if self.guidance_weight < 0:
            raise InvalidArgumentError("guidance weight must be >= 0", {'guidance_weight': self.guidance_weight})
        if isinstance(self.gamma, str) and self.gamma != 'auto':
            raise InvalidArgumentError("gamma must be a number or 'auto'", {'gamma': self.gamma})
        if not isinstance(self.gamma, str) and self.gamma < 0:
            raise InvalidArgumentError("gamma must be >= 0", {'gamma': self.gamma})

    @property
    def selection(self) -> Criterion:
        return SELECTION.get(self.method, Criterion.RANDOM)

    @property
    def label(self) -> str:
        if self.method is Method.GUIDANCE:
            return f"guidance:w={self.guidance_weight:g}"
        return self.method.value

    @classmethod
    def from_dict(cls, data: Optional[Dict[str, Any]]) -> 'ControllerConfig':
        data = dict(data or {})
        method = data.get('method', Method.DPCC_C.value)
        guidance_weight = data.get('guidance_weight', 1.0)
        if isinstance(method, str) and ':w=' in method:
            guidance_weight = float(method.split(':w=', 1)[1])
        gamma = data.get('gamma', 'auto')
        return cls(
            method=parse_method(method),
            batch_size=int(data.get('batch_size', 4)),
            tightening=bool(data.get('tightening', True)),
            gamma=gamma if gamma == 'auto' else float(gamma),
            guidance_weight=float(guidance_weight),
            diffusion_steps=data.get('diffusion_steps'),
            horizon=data.get('horizon'),
            solver=SolverOptions.from_dict(data.get('solver')),
            diagnostics=bool(data.get('diagnostics', True))
        )

    def to_dict(self) -> Dict[str, Any]:
        return {
            'method': self.method.value,
            'batch_size': self.batch_size,
            'tightening': self.tightening,
            'gamma': self.gamma,
            'guidance_weight': self.guidance_weight,
            'diffusion_steps': self.diffusion_steps,
            'horizon': self.horizon,
            'solver': vars(self.solver).copy(),
            'diagnostics': self.diagnostics
        }


@dataclass
class ControllerState:
    """Per-episode memory: the last selected plan (normalized) and a step counter"""
    previous: Optional[np.ndarray] = None
    previous_index: Optional[int] = None
    step: int = 0

    def update(self, selected: np.ndarray, index: int) -> None:
        self.previous = np.array(selected, dtype=float)
        self.previous_index = int(index)
        self.step += 1

    def reset(self) -> None:
        self.previous = None
        self.previous_index = None
        self.step = 0
