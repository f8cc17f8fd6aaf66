import argparse
from dataclasses import replace
import json
import logging
from pathlib import Path
import sys
from typing import Any, Callable, Dict, List, Optional

import numpy as np

from ..config.settings import Settings, configure_logging, load_settings
from ..controller.policy import dataset_action_box
from ..controller.settings import parse_method
from ..core.normalization import normalizer_fit
from ..diffusion.checkpoint import load_checkpoint, save_checkpoint
from ..diffusion.trainer import train
from ..environment.constraint_suites import novel_constraint_suite, suite_statistics
from ..environment.expert import ExpertPolicy, generate_demos, route_histogram
from ..environment.mismatch import estimate_gamma
from ..errors.handler import ErrorHandler
from ..monitoring.metrics import MetricsCollector
from .dataset import read_demos, training_arrays, write_demos
from .episode import run_episode
from .evaluation import ablate_model_mismatch, checkpoint_path, evaluate, resolve_gamma, suites_by_name

logger = logging.getLogger(__name__)

STATE_DIM = 4


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog='diffusion-mpc',
        description='Constrained diffusion predictive control: demos, training, rollouts and evaluation'
    )
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--config', help='YAML file merged over the packaged defaults')
    common.add_argument('--profile', help='configuration profile (default: $DIFFUSION_MPC_PROFILE or desk)')
    common.add_argument('--seed', type=int, help='seed for the command (demo, training or test seed)')
    common.add_argument('--out', help='output directory')
    common.add_argument('--method', help='controller method, e.g. dpcc-c or guidance:w=10')
    common.add_argument('--no-tightening', action='store_true', help='plan against the untightened constraints')

    sub = parser.add_subparsers(dest='command', required=True)
    sub.add_parser('demo-gen', parents=[common], help='generate expert demonstrations')
    sub.add_parser('train', parents=[common], help='train one denoiser per training seed')
    rollout = sub.add_parser('rollout', parents=[common], help='run one closed-loop episode')
    rollout.add_argument('--suite', help='constraint suite name (default: first configured)')
    rollout.add_argument('--train-seed', type=int, help='checkpoint to use (default: first training seed)')
    sub.add_parser('eval', parents=[common], help='method comparison and tightening ablation')
    sub.add_parser('ablate', parents=[common], help='sampling-time mismatch ablation')
    return parser


def _overrides(args: argparse.Namespace) -> Dict[str, Any]:
    overrides: Dict[str, Any] = {}
    if args.out:
        out = Path(args.out)
        overrides['paths'] = {'output_dir': str(out), 'checkpoint_dir': str(out / 'checkpoints')}
    if args.method:
        parse_method(args.method)
        overrides['controller'] = {'method': args.method}
        if args.command == 'ablate':
            overrides['experiment'] = {'ablation_method': args.method}
        elif args.command == 'eval':
            overrides['experiment'] = {'methods': [args.method]}
    if args.no_tightening:
        overrides.setdefault('controller', {})['tightening'] = False
        if args.command == 'eval':
            overrides.setdefault('experiment', {})['tightening'] = [False]
    if args.seed is not None and args.command == 'train':
        overrides.setdefault('experiment', {})['train_seeds'] = [args.seed]
    return overrides


def _emit(payload: Dict[str, Any]) -> None:
    print(json.dumps(payload, sort_keys=True, default=float))


def cmd_demo_gen(args: argparse.Namespace, settings: Settings) -> None:
    seed = settings.experiment.demo_seed if args.seed is None else args.seed
    demos = generate_demos(settings.env, settings.experiment.n_demos, seed)
    path = write_demos(settings.paths.demos_path, demos)

    normalizer = normalizer_fit(training_arrays(demos), state_dim=STATE_DIM)
    gamma = settings.controller.gamma
    if gamma == 'auto':
        gamma = estimate_gamma(ExpertPolicy(settings.env), settings.env, normalizer,
                               n_rollouts=settings.experiment.gamma_rollouts, seed=seed)
    margin = float(gamma) * float(np.max(normalizer.scale[:2]))
    stats = {
        'demos': len(demos),
        'path': str(path),
        'routes': route_histogram(demos),
        'gamma': float(gamma),
        'suites': suite_statistics(settings.suites, demos, margin)
    }
    with open(settings.paths.output_dir / 'suite_stats.json', 'w') as f:
        json.dump(stats, f, indent=2, sort_keys=True)
    _emit(stats)


def cmd_train(args: argparse.Namespace, settings: Settings) -> None:
    demos = read_demos(settings.paths.demos_path)
    dataset = training_arrays(demos)
    summary = {}
    for seed in settings.experiment.train_seeds:
        config = replace(settings.training, seed=seed)
        checkpoint = train(dataset, config, STATE_DIM, dynamics=settings.env.nominal_dynamics())
        path = save_checkpoint(checkpoint, checkpoint_path(settings.paths.checkpoint_dir, seed))
        summary[str(seed)] = {
            'path': str(path),
            'initial_val_loss': checkpoint.initial_val_loss,
            'best_val_loss': checkpoint.best_val_loss,
            'best_step': checkpoint.best_step
        }
    _emit({'checkpoints': summary})


def cmd_rollout(args: argparse.Namespace, settings: Settings) -> None:
    train_seed = settings.experiment.train_seeds[0] if args.train_seed is None else args.train_seed
    seed = 0 if args.seed is None else args.seed
    checkpoint = load_checkpoint(checkpoint_path(settings.paths.checkpoint_dir, train_seed))
    controller = settings.controller
    suite = suites_by_name(settings.suites, [args.suite] if args.suite else None)[0]

    gamma = resolve_gamma(controller, checkpoint, settings.env, settings.experiment.gamma_rollouts)
    margin = gamma * float(np.max(checkpoint.normalizer.scale[:2])) if controller.tightening else 0.0
    constraints = novel_constraint_suite(
        settings.env, [suite], checkpoint.dims.horizon,
        action_box=dataset_action_box(checkpoint), margin=margin
    )[0]

    metrics = MetricsCollector()
    label = controller.label.replace(':', '_').replace('=', '')
    diagnostics = settings.paths.output_dir / f"rollout_{label}_seed{seed}.jsonl"
    result = run_episode(
        checkpoint, controller, settings.env, constraints, seed,
        gamma=gamma,
        suite_name=suite.name,
        train_seed=train_seed,
        record_positions=True,
        metrics=metrics,
        diagnostics_path=diagnostics
    )
    _emit({'episode': result.model_dump(exclude={'positions'}), 'diagnostics': str(diagnostics),
           'latency': metrics.latency_summary()})


def cmd_eval(args: argparse.Namespace, settings: Settings) -> None:
    table = evaluate(settings)
    _emit({'rows': len(table), 'out': str(settings.paths.output_dir)})


def cmd_ablate(args: argparse.Namespace, settings: Settings) -> None:
    table = ablate_model_mismatch(settings)
    _emit({'rows': len(table), 'out': str(settings.paths.output_dir)})


COMMANDS: Dict[str, Callable[[argparse.Namespace, Settings], None]] = {
    'demo-gen': cmd_demo_gen,
    'train': cmd_train,
    'rollout': cmd_rollout,
    'eval': cmd_eval,
    'ablate': cmd_ablate,
}


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    handler = ErrorHandler()
    try:
        settings = load_settings(args.profile, args.config, _overrides(args))
        configure_logging(settings)
        settings.paths.output_dir.mkdir(parents=True, exist_ok=True)
        settings.write_resolved(settings.paths.output_dir)
        logger.info(f"Running {args.command} with profile {settings.profile}")
        COMMANDS[args.command](args, settings)
        return 0
    except Exception as e:
        print(handler.format_line(e), file=sys.stderr)
        return handler.exit_code(e)


if __name__ == '__main__':
    sys.exit(main())
