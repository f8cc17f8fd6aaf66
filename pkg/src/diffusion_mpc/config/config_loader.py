from copy import deepcopy
from pathlib import Path
from typing import Any, Dict, Optional, Union

import yaml

from ..errors import ConfigurationError

DEFAULT_PROFILE = 'desk'


def load_config(config_path: Optional[Union[str, Path]] = None) -> Dict[str, Any]:
    """Load configuration from YAML file"""
    if not config_path:
        config_path = Path(__file__).parent / 'default_config.yaml'
    config_path = Path(config_path)
    if not config_path.exists():
        raise ConfigurationError(f"Configuration file not found: {config_path}", {'path': str(config_path)})
    try:
        with open(config_path, 'r') as f:
            return yaml.safe_load(f) or {}
    except yaml.YAMLError as e:
        raise ConfigurationError(f"Invalid YAML in {config_path}: {str(e)}", {'path': str(config_path)})


def deep_merge(base: Dict[str, Any], override: Dict[str, Any]) -> Dict[str, Any]:
    """Recursive dict merge; lists and scalars in ``override`` replace those in ``base``"""
    merged = deepcopy(base)
    for key, value in (override or {}).items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = deep_merge(merged[key], value)
        else:
            merged[key] = deepcopy(value)
    return merged


def get_profile_config(
    profile: str = DEFAULT_PROFILE,
    config: Optional[Dict[str, Any]] = None
) -> Dict[str, Any]:
    """Sections of one profile, following ``extends`` chains"""
    config = config if config is not None else load_config()
    profiles = config.get('profiles') or {}
    if profile not in profiles:
        raise ConfigurationError(f"Unknown profile: {profile}", {'available': sorted(profiles)})

    chain = []
    name: Optional[str] = profile
    while name is not None:
        if name in chain:
            raise ConfigurationError(f"Profile inheritance cycle at {name}", {'chain': chain})
        if name not in profiles:
            raise ConfigurationError(f"Profile {chain[-1]} extends unknown profile {name}")
        chain.append(name)
        name = (profiles[name] or {}).get('extends')

    resolved: Dict[str, Any] = {}
    for name in reversed(chain):
        sections = {k: v for k, v in (profiles[name] or {}).items() if k != 'extends'}
        resolved = deep_merge(resolved, sections)
    return resolved
