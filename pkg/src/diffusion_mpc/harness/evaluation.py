from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from functools import lru_cache
import json
import logging
from pathlib import Path
import re
from typing import TYPE_CHECKING, Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
import torch

from ..controller.policy import dataset_action_box
from ..controller.settings import ControllerConfig, Method, parse_method
from ..core.data_model import ConstraintSuite, StageConstraintSet
from ..core.normalization import normalize_primitives
from ..diffusion.checkpoint import load_checkpoint
from ..diffusion.trainer import Checkpoint
from ..environment.constraint_suites import novel_constraint_suite
from ..environment.expert import ExpertPolicy
from ..environment.mismatch import DisturbanceModel, estimate_gamma
from ..environment.plant import EnvConfig
from ..errors import CheckpointNotFoundError, InvalidArgumentError
from ..models import AggregateMetrics, EpisodeResult
from ..projection.violations import FEASIBILITY_TOL
from .episode import run_episode

if TYPE_CHECKING:
    from ..config.settings import Settings

logger = logging.getLogger(__name__)

TABLE_VERSION = 1
CSV_COLUMNS = [
    'method', 'tightening', 'mismatch', 'timesteps_mean', 'timesteps_std',
    'goal_rate', 'cg_rate', 'viol_mean', 'viol_std'
]
EXTENDED_COLUMNS = CSV_COLUMNS + [
    'episodes', 'success_timesteps_mean', 'fallback_steps_mean', 'nonconverged_steps_mean'
]
DISTURBANCE_MODES = ('none', 'adversarial', 'random')


@dataclass
class ExperimentConfig:
    methods: List[str] = field(default_factory=lambda: ['dpcc-r', 'dpcc-t', 'dpcc-c'])
    tightening: List[bool] = field(default_factory=lambda: [True, False])
    train_seeds: List[int] = field(default_factory=lambda: [0, 1, 2])
    test_seeds: List[int] = field(default_factory=lambda: [0, 1, 2, 3, 4])
    mismatch_factors: List[float] = field(default_factory=lambda: [0.25, 0.5, 1.0, 2.0, 4.0])
    ablation_method: str = 'dpcc-c'
    guidance_weights: List[float] = field(default_factory=lambda: [0.1, 1.0, 10.0])
    suites: Optional[List[str]] = None
    workers: int = 1
    violation_threshold: float = FEASIBILITY_TOL
    gamma_rollouts: int = 20
    n_demos: int = 96
    demo_seed: int = 0
    disturbance: str = 'none'
    step_logs: bool = False
    record_trajectories: bool = True

    def __post_init__(self):
        if not self.train_seeds or not self.test_seeds:
            raise InvalidArgumentError("train and test seed lists must be non-empty")
        if not self.tightening:
            raise InvalidArgumentError("tightening list must be non-empty")
        if self.workers < 1:
            raise InvalidArgumentError("workers must be >= 1", {'workers': self.workers})
        if self.disturbance not in DISTURBANCE_MODES:
            raise InvalidArgumentError(
                f"Unknown disturbance mode: {self.disturbance}", {'expected': list(DISTURBANCE_MODES)})
        if any(f <= 0 for f in self.mismatch_factors):
            raise InvalidArgumentError("mismatch factors must be positive", {'factors': self.mismatch_factors})
        for method in self.methods:
            parse_method(method)
        parse_method(self.ablation_method)

    @classmethod
    def from_dict(cls, data: Optional[Dict[str, Any]]) -> 'ExperimentConfig':
        data = dict(data or {})
        known = {k: v for k, v in data.items() if k in cls.__dataclass_fields__}
        for key in ('methods', 'tightening', 'train_seeds', 'test_seeds', 'mismatch_factors', 'guidance_weights'):
            if key in known and known[key] is not None:
                known[key] = list(known[key])
        return cls(**known)

    def to_dict(self) -> Dict[str, Any]:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


@dataclass
class EpisodeTask:
    """Everything one worker needs for one episode; picklable"""
    checkpoint_path: str
    controller: ControllerConfig
    env: EnvConfig
    constraints: StageConstraintSet
    suite: str
    seed: int
    train_seed: int
    gamma: float
    mismatch: float = 1.0
    disturbance: str = 'none'
    violation_threshold: float = FEASIBILITY_TOL
    record_positions: bool = False
    diagnostics_path: Optional[str] = None


def checkpoint_path(checkpoint_dir: Union[str, Path], seed: int) -> Path:
    return Path(checkpoint_dir) / f"seed_{seed}" / "checkpoint.pt"


@lru_cache(maxsize=8)
def _cached_checkpoint(path: str) -> Checkpoint:
    return load_checkpoint(path)


def _init_worker():
    torch.set_num_threads(1)


def _run_task(task: EpisodeTask) -> EpisodeResult:
    checkpoint = _cached_checkpoint(task.checkpoint_path)
    disturbance = None
    if task.disturbance != 'none':
        true_primitives = normalize_primitives(task.constraints.state_constraints[1], checkpoint.normalizer)
        disturbance = DisturbanceModel(task.gamma, checkpoint.normalizer, true_primitives,
                                       mode=task.disturbance, seed=task.seed)
    return run_episode(
        checkpoint,
        task.controller,
        task.env,
        task.constraints,
        task.seed,
        gamma=task.gamma,
        suite_name=task.suite,
        train_seed=task.train_seed,
        mismatch=task.mismatch,
        disturbance=disturbance,
        violation_threshold=task.violation_threshold,
        record_positions=task.record_positions,
        diagnostics_path=task.diagnostics_path
    )


def run_tasks(tasks: Sequence[EpisodeTask], workers: int = 1) -> List[EpisodeResult]:
    """Run episodes, concurrently when workers > 1; results keep task order"""
    if workers <= 1 or len(tasks) <= 1:
        return [_run_task(task) for task in tasks]
    with ProcessPoolExecutor(max_workers=workers, initializer=_init_worker) as executor:
        return list(executor.map(_run_task, tasks))


def method_grid(experiment: ExperimentConfig, base: ControllerConfig) -> List[ControllerConfig]:
    """One controller config per table row label and tightening flag"""
    grid = []
    for name in experiment.methods:
        method = parse_method(name)
        if method is Method.GUIDANCE and ':w=' not in name:
            variants = [replace(base, method=method, guidance_weight=float(w)) for w in experiment.guidance_weights]
        else:
            variants = [ControllerConfig.from_dict({**base.to_dict(), 'method': name})]
        # the unconstrained sampler ignores constraints, tightening does not apply
        flags = [False] if method is Method.DIFFUSER else list(experiment.tightening)
        grid.extend(replace(v, tightening=flag) for v in variants for flag in flags)
    return grid


def resolve_gamma(
    controller: ControllerConfig,
    checkpoint: Checkpoint,
    env: EnvConfig,
    rollouts: int = 20
) -> float:
    """Numeric gamma as configured, or estimated from expert rollouts for 'auto'"""
    if controller.gamma == 'auto':
        return estimate_gamma(ExpertPolicy(env), env, checkpoint.normalizer, n_rollouts=rollouts, seed=0)
    return float(controller.gamma)


def _require_checkpoints(checkpoint_dir: Union[str, Path], seeds: Sequence[int]) -> Dict[int, Path]:
    paths = {}
    for seed in seeds:
        path = checkpoint_path(checkpoint_dir, seed)
        if not path.exists():
            raise CheckpointNotFoundError(
                f"Missing checkpoint for training seed {seed}: {path}",
                {'seed': seed, 'path': str(path)}
            )
        paths[seed] = path
    return paths


def _slug(text: str) -> str:
    return re.sub(r'[^A-Za-z0-9_.-]+', '-', text)


def build_tasks(
    settings: 'Settings',
    cells: Sequence[Tuple[ControllerConfig, float]],
    out_dir: Optional[Path] = None
) -> List[EpisodeTask]:
    experiment = settings.experiment
    env = settings.env
    suites = suites_by_name(settings.suites, experiment.suites)
    if not cells:
        return []
    paths = _require_checkpoints(settings.paths.checkpoint_dir, experiment.train_seeds)

    tasks = []
    for controller, factor in cells:
        for train_seed in experiment.train_seeds:
            checkpoint = _cached_checkpoint(str(paths[train_seed]))
            gamma = resolve_gamma(controller, checkpoint, env, experiment.gamma_rollouts)
            margin = gamma * float(np.max(checkpoint.normalizer.scale[:2]))
            stage_sets = novel_constraint_suite(
                env, suites, checkpoint.dims.horizon,
                action_box=dataset_action_box(checkpoint),
                margin=margin if controller.tightening else 0.0
            )
            for suite, constraints in zip(suites, stage_sets):
                for i, seed in enumerate(experiment.test_seeds):
                    diagnostics = None
                    if experiment.step_logs and out_dir is not None:
                        name = (f"{_slug(controller.label)}_t{int(controller.tightening)}_m{factor:g}"
                                f"_{_slug(suite.name)}_tr{train_seed}_te{seed}.jsonl")
                        diagnostics = str(out_dir / 'episodes' / name)
                    tasks.append(EpisodeTask(
                        checkpoint_path=str(paths[train_seed]),
                        controller=controller,
                        env=env,
                        constraints=constraints,
                        suite=suite.name,
                        seed=seed,
                        train_seed=train_seed,
                        gamma=gamma,
                        mismatch=factor,
                        disturbance=experiment.disturbance,
                        violation_threshold=experiment.violation_threshold,
                        record_positions=experiment.record_trajectories and i == 0
                            and train_seed == experiment.train_seeds[0],
                        diagnostics_path=diagnostics
                    ))
    return tasks


def aggregate(results: Sequence[EpisodeResult]) -> List[AggregateMetrics]:
    """Mean and std per (method, tightening, mismatch), in order of first appearance"""
    groups: Dict[Tuple[str, bool, float], List[EpisodeResult]] = {}
    for result in results:
        groups.setdefault((result.method, result.tightening, result.mismatch), []).append(result)

    rows = []
    for (method, tightening, mismatch), episodes in groups.items():
        timesteps = np.array([e.timesteps for e in episodes], dtype=float)
        violations = np.array([e.violation_steps for e in episodes], dtype=float)
        successes = [e.timesteps for e in episodes if e.goal_reached]
        per_suite: Dict[str, List[bool]] = {}
        for e in episodes:
            per_suite.setdefault(e.suite, []).append(e.constraints_and_goal)
        rows.append(AggregateMetrics(
            method=method,
            tightening=tightening,
            mismatch=mismatch,
            episodes=len(episodes),
            timesteps_mean=float(timesteps.mean()),
            timesteps_std=float(timesteps.std()),
            goal_rate=float(np.mean([e.goal_reached for e in episodes])),
            cg_rate=float(np.mean([e.constraints_and_goal for e in episodes])),
            viol_mean=float(violations.mean()),
            viol_std=float(violations.std()),
            success_timesteps_mean=float(np.mean(successes)) if successes else None,
            fallback_steps_mean=float(np.mean([e.fallback_steps for e in episodes])),
            nonconverged_steps_mean=float(np.mean([e.nonconverged_steps for e in episodes])),
            per_suite={name: float(np.mean(flags)) for name, flags in per_suite.items()}
        ))
    return rows


def metrics_table(rows: Sequence[AggregateMetrics], extended: bool = False) -> pd.DataFrame:
    columns = EXTENDED_COLUMNS if extended else CSV_COLUMNS
    if not rows:
        return pd.DataFrame(columns=columns)
    frame = pd.DataFrame([row.model_dump() for row in rows])
    if extended:
        for name in sorted({k for row in rows for k in row.per_suite}):
            frame[f"cg_rate[{name}]"] = [row.per_suite.get(name) for row in rows]
        columns = columns + [c for c in frame.columns if c.startswith('cg_rate[')]
    return frame[columns]


def plot_data(rows: Sequence[AggregateMetrics], results: Sequence[EpisodeResult]) -> Dict[str, Any]:
    trajectories = {}
    for r in results:
        if r.positions is not None:
            label = f"{r.method}|tightening={r.tightening}|mismatch={r.mismatch:g}|{r.suite}"
            trajectories.setdefault(label, r.positions)
    return {
        'schema_version': TABLE_VERSION,
        'rows': [row.model_dump() for row in rows],
        'trajectories': trajectories
    }


def write_outputs(
    out_dir: Union[str, Path],
    rows: Sequence[AggregateMetrics],
    results: Sequence[EpisodeResult],
    name: str = 'metrics'
) -> Dict[str, Path]:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = {
        'metrics': out_dir / f"{name}_v{TABLE_VERSION}.csv",
        'extended': out_dir / f"{name}_extended_v{TABLE_VERSION}.csv",
        'episodes': out_dir / f"{name}_episodes_v{TABLE_VERSION}.jsonl",
        'plot_data': out_dir / f"plot_data_v{TABLE_VERSION}.json" if name == 'metrics'
        else out_dir / f"{name}_plot_data_v{TABLE_VERSION}.json"
    }
    metrics_table(rows).to_csv(paths['metrics'], index=False, float_format='%.6f')
    metrics_table(rows, extended=True).to_csv(paths['extended'], index=False, float_format='%.6f')
    with open(paths['episodes'], 'w', encoding='utf-8') as f:
        for result in results:
            f.write(result.model_dump_json(exclude={'positions'}) + '\n')
    with open(paths['plot_data'], 'w', encoding='utf-8') as f:
        json.dump(plot_data(rows, results), f, indent=2)
    logger.info(f"Wrote {len(rows)} table rows from {len(results)} episodes to {out_dir}")
    return paths


def _run_cells(
    settings: 'Settings',
    cells: Sequence[Tuple[ControllerConfig, float]],
    out_dir: Path,
    name: str
) -> pd.DataFrame:
    tasks = build_tasks(settings, cells, out_dir)
    logger.info(f"Running {len(tasks)} episodes with {settings.experiment.workers} worker(s)")
    results = run_tasks(tasks, settings.experiment.workers)
    rows = aggregate(results)
    write_outputs(out_dir, rows, results, name)
    return metrics_table(rows)


def evaluate(settings: 'Settings', out_dir: Optional[Union[str, Path]] = None) -> pd.DataFrame:
    """Method comparison and tightening ablation at the nominal sampling time"""
    out_dir = Path(out_dir or settings.paths.output_dir)
    cells = [(controller, 1.0) for controller in method_grid(settings.experiment, settings.controller)]
    return _run_cells(settings, cells, out_dir, 'metrics')


def ablate_model_mismatch(settings: 'Settings', out_dir: Optional[Union[str, Path]] = None) -> pd.DataFrame:
    """Scale the nominal model's sampling time inside the projection; the plant is unchanged"""
    experiment = settings.experiment
    out_dir = Path(out_dir or settings.paths.output_dir)
    base = ControllerConfig.from_dict({**settings.controller.to_dict(), 'method': experiment.ablation_method})
    base = replace(base, tightening=True)
    cells = [(base, float(factor)) for factor in experiment.mismatch_factors]
    return _run_cells(settings, cells, out_dir, 'ablation')


def suites_by_name(suites: Sequence[ConstraintSuite], names: Optional[Sequence[str]]) -> List[ConstraintSuite]:
    if names is None:
        return list(suites)
    known = {s.name: s for s in suites}
    missing = [n for n in names if n not in known]
    if missing:
        raise InvalidArgumentError(f"Unknown constraint suite(s): {', '.join(missing)}", {'known': list(known)})
    return [known[n] for n in names]
