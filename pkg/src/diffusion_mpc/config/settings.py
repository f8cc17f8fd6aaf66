from dataclasses import dataclass, field
import logging
import os
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

from dotenv import load_dotenv
import yaml

from ..controller.settings import ControllerConfig
from ..core.data_model import ConstraintSuite
from ..core.schedule import BETA_CLIP, COSINE_OFFSET
from ..diffusion.trainer import TrainConfig
from ..environment.plant import EnvConfig
from ..errors import ConfigurationError
from ..harness.evaluation import ExperimentConfig
from .config_loader import DEFAULT_PROFILE, deep_merge, get_profile_config, load_config
from .validation import ConfigurationValidator

PROFILE_ENV_VAR = 'DIFFUSION_MPC_PROFILE'
LOG_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"
SECTIONS = ('env', 'training', 'controller', 'experiment', 'constraint_suites', 'paths', 'logging')


@dataclass
class PathSettings:
    output_dir: Path = Path('outputs')
    demos_file: str = 'demos.jsonl'
    checkpoint_dir: Path = Path('outputs/checkpoints')
    log_dir: Path = Path('logs')

    @property
    def demos_path(self) -> Path:
        return self.output_dir / self.demos_file

    @classmethod
    def from_dict(cls, data: Optional[Dict[str, Any]]) -> 'PathSettings':
        data = dict(data or {})
        return cls(
            output_dir=Path(data.get('output_dir', 'outputs')),
            demos_file=str(data.get('demos_file', 'demos.jsonl')),
            checkpoint_dir=Path(data.get('checkpoint_dir', 'outputs/checkpoints')),
            log_dir=Path(data.get('log_dir', 'logs'))
        )

    def to_dict(self) -> Dict[str, Any]:
        return {
            'output_dir': str(self.output_dir),
            'demos_file': self.demos_file,
            'checkpoint_dir': str(self.checkpoint_dir),
            'log_dir': str(self.log_dir)
        }


@dataclass
class LoggingSettings:
    level: str = 'INFO'
    format: str = LOG_FORMAT
    file: Optional[str] = 'diffusion_mpc.log'

    @classmethod
    def from_dict(cls, data: Optional[Dict[str, Any]]) -> 'LoggingSettings':
        data = dict(data or {})
        level = str(data.get('level', 'INFO')).upper()
        if not isinstance(logging.getLevelName(level), int):
            raise ConfigurationError(f"Unknown log level: {level}")
        return cls(level=level, format=data.get('format', LOG_FORMAT), file=data.get('file', 'diffusion_mpc.log'))

    def to_dict(self) -> Dict[str, Any]:
        return {'level': self.level, 'format': self.format, 'file': self.file}


@dataclass
class Settings:
    """Resolved configuration for one run"""
    profile: str = DEFAULT_PROFILE
    env: EnvConfig = field(default_factory=EnvConfig)
    training: TrainConfig = field(default_factory=TrainConfig)
    controller: ControllerConfig = field(default_factory=ControllerConfig)
    experiment: ExperimentConfig = field(default_factory=ExperimentConfig)
    suites: List[ConstraintSuite] = field(default_factory=list)
    paths: PathSettings = field(default_factory=PathSettings)
    logging: LoggingSettings = field(default_factory=LoggingSettings)

    @classmethod
    def from_dict(cls, sections: Dict[str, Any], profile: str = DEFAULT_PROFILE) -> 'Settings':
        suites = sections.get('constraint_suites') or []
        ConfigurationValidator().require_valid(suites, 'constraint_suite')
        try:
            return cls(
                profile=profile,
                env=EnvConfig.from_dict(sections.get('env')),
                training=TrainConfig.from_dict(sections.get('training')),
                controller=ControllerConfig.from_dict(sections.get('controller')),
                experiment=ExperimentConfig.from_dict(sections.get('experiment')),
                suites=[ConstraintSuite.from_dict(s) for s in suites],
                paths=PathSettings.from_dict(sections.get('paths')),
                logging=LoggingSettings.from_dict(sections.get('logging'))
            )
        except TypeError as e:
            raise ConfigurationError(f"Invalid configuration: {str(e)}", {'profile': profile})

    def to_dict(self) -> Dict[str, Any]:
        return {
            'profile': self.profile,
            'env': self.env.to_dict(),
            'training': self.training.to_dict(),
            'controller': self.controller.to_dict(),
            'experiment': self.experiment.to_dict(),
            'constraint_suites': [s.to_dict() for s in self.suites],
            'paths': self.paths.to_dict(),
            'logging': self.logging.to_dict(),
            'schedule': {'type': 'cosine', 'offset': COSINE_OFFSET, 'beta_clip': BETA_CLIP}
        }

    def write_resolved(self, out_dir: Union[str, Path]) -> Path:
        path = Path(out_dir) / 'resolved_config.yaml'
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, 'w') as f:
            yaml.safe_dump(self.to_dict(), f, sort_keys=False)
        return path


def _user_sections(document: Dict[str, Any], profile: str) -> Dict[str, Any]:
    """A user file is either a full document with profiles or a bare section mapping"""
    if 'profiles' in document:
        profiles = document['profiles'] or {}
        return {k: v for k, v in (profiles.get(profile) or {}).items() if k != 'extends'}
    unknown = sorted(set(document) - set(SECTIONS))
    if unknown:
        raise ConfigurationError(f"Unknown configuration sections: {', '.join(unknown)}", {'allowed': list(SECTIONS)})
    return document


def load_settings(
    profile: Optional[str] = None,
    config_path: Optional[Union[str, Path]] = None,
    overrides: Optional[Dict[str, Any]] = None
) -> Settings:
    """Packaged defaults for the profile, then the user file, then explicit overrides"""
    load_dotenv()
    profile = profile or os.getenv(PROFILE_ENV_VAR) or DEFAULT_PROFILE
    sections = get_profile_config(profile)
    if config_path:
        sections = deep_merge(sections, _user_sections(load_config(config_path), profile))
    if overrides:
        sections = deep_merge(sections, overrides)
    return Settings.from_dict(sections, profile)


def configure_logging(settings: Settings) -> None:
    """Stream and file handlers on the root logger; called once by the command line"""
    handlers: List[logging.Handler] = [logging.StreamHandler()]
    if settings.logging.file:
        settings.paths.log_dir.mkdir(parents=True, exist_ok=True)
        handlers.append(logging.FileHandler(settings.paths.log_dir / settings.logging.file))
    formatter = logging.Formatter(settings.logging.format)
    root = logging.getLogger()
    for handler in list(root.handlers):
        if getattr(handler, "_diffusion_mpc", False):
            root.removeHandler(handler)
            handler.close()
    for handler in handlers:
        handler.setFormatter(formatter)
        handler._diffusion_mpc = True
        root.addHandler(handler)
    root.setLevel(settings.logging.level)
