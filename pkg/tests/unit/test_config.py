import pytest
import yaml

from diffusion_mpc.config.config_loader import deep_merge, get_profile_config, load_config
from diffusion_mpc.config.settings import PROFILE_ENV_VAR, load_settings
from diffusion_mpc.config.validation import ConfigurationValidator
from diffusion_mpc.controller.settings import Method
from diffusion_mpc.errors import ConfigurationError, InvalidArgumentError


def test_desk_profile_defaults():
    settings = load_settings('desk')
    assert settings.profile == 'desk'
    assert settings.training.train_steps == 20000
    assert settings.experiment.train_seeds == [0, 1, 2]
    assert settings.controller.method is Method.DPCC_C
    assert [s.name for s in settings.suites] == ['halfspace-disk', 'three-disks', 'diagonal']


def test_full_profile_extends_desk():
    desk = load_settings('desk')
    full = load_settings('full')
    assert full.training.train_steps == 100000
    assert len(full.experiment.test_seeds) == 10
    assert full.env == desk.env
    assert full.controller.gamma == desk.controller.gamma


def test_profile_from_environment(monkeypatch):
    monkeypatch.setenv(PROFILE_ENV_VAR, 'full')
    assert load_settings().profile == 'full'


def test_user_file_with_bare_sections(temp_dir):
    path = temp_dir / 'override.yaml'
    path.write_text(yaml.safe_dump({
        'controller': {'gamma': 'auto', 'batch_size': 8},
        'experiment': {'methods': ['dpcc-c', 'model-free']},
        'constraint_suites': [{'name': 'wall', 'primitives': [
            {'type': 'halfspace', 'normal': [1.0, 0.0], 'offset': 0.2, 'coords': [0, 1]}]}]
    }))
    settings = load_settings('desk', path)
    assert settings.controller.gamma == 'auto'
    assert settings.controller.batch_size == 8
    # untouched keys keep their defaults
    assert settings.controller.tightening is True
    assert settings.experiment.methods == ['dpcc-c', 'model-free']
    assert [s.name for s in settings.suites] == ['wall']


def test_overrides_win_over_files(test_config):
    settings = load_settings('desk', overrides=test_config)
    assert settings.training.horizon == 3
    assert settings.env.max_steps == 12
    assert settings.logging.file is None


def test_unknown_sections_and_profiles(temp_dir):
    path = temp_dir / 'bad.yaml'
    path.write_text(yaml.safe_dump({'database': {'host': 'localhost'}}))
    with pytest.raises(ConfigurationError):
        load_settings('desk', path)
    with pytest.raises(ConfigurationError):
        load_settings('lab')
    with pytest.raises(ConfigurationError):
        load_config(temp_dir / 'missing.yaml')


def test_invalid_yaml(temp_dir):
    path = temp_dir / 'broken.yaml'
    path.write_text('controller: [unclosed')
    with pytest.raises(ConfigurationError):
        load_config(path)


def test_profile_cycles_are_detected():
    config = {'profiles': {'a': {'extends': 'b'}, 'b': {'extends': 'a'}}}
    with pytest.raises(ConfigurationError):
        get_profile_config('a', config)


def test_deep_merge_keeps_nested_defaults():
    merged = deep_merge({'solver': {'max_iter': 50, 'ftol': 1e-10}, 'x': [1, 2]},
                       {'solver': {'max_iter': 10}, 'x': [3]})
    assert merged == {'solver': {'max_iter': 10, 'ftol': 1e-10}, 'x': [3]}


def test_suite_schema_errors_are_collected():
    validator = ConfigurationValidator()
    errors = validator.validate_config([
        {'name': 'bad', 'primitives': [{'type': 'disk', 'center': [0.0, 0.0]}]},
        {'primitives': []},
    ], 'constraint_suite')
    assert len(errors) >= 2
    assert validator.validate_config([], 'unknown_type') == ["No schema found for config type: unknown_type"]


def test_invalid_suite_in_settings():
    with pytest.raises(ConfigurationError) as exc_info:
        load_settings('desk', overrides={'constraint_suites': [
            {'name': 'bad', 'primitives': [{'type': 'disk', 'center': [0.0, 0.0]}]}]})
    assert exc_info.value.details['errors']


def test_invalid_values_are_rejected():
    with pytest.raises(InvalidArgumentError):
        load_settings('desk', overrides={'experiment': {'workers': 0}})
    with pytest.raises(InvalidArgumentError):
        load_settings('desk', overrides={'controller': {'method': 'mpc'}})
    with pytest.raises(ConfigurationError):
        load_settings('desk', overrides={'logging': {'level': 'LOUD'}})


def test_resolved_config_is_written(temp_dir):
    settings = load_settings('desk')
    path = settings.write_resolved(temp_dir)
    resolved = yaml.safe_load(path.read_text())
    assert resolved['profile'] == 'desk'
    assert resolved['schedule']['type'] == 'cosine'
    assert resolved['constraint_suites'][0]['name'] == 'halfspace-disk'
