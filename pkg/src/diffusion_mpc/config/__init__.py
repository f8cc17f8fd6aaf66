from .config_loader import deep_merge, get_profile_config, load_config
from .settings import LoggingSettings, PathSettings, Settings, configure_logging, load_settings
from .validation import ConfigurationValidator

__all__ = [
    'ConfigurationValidator',
    'LoggingSettings',
    'PathSettings',
    'Settings',
    'configure_logging',
    'deep_merge',
    'get_profile_config',
    'load_config',
    'load_settings',
]
