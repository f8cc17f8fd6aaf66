import pytest
from pathlib import Path
import yaml

import numpy as np

from diffusion_mpc.config.config_loader import deep_merge
from diffusion_mpc.config.settings import load_settings
from diffusion_mpc.core.normalization import Normalizer
from diffusion_mpc.core.schedule import cosine_schedule
from diffusion_mpc.diffusion.denoiser import NetworkDims, build_denoiser
from diffusion_mpc.diffusion.trainer import Checkpoint, TrainConfig
from diffusion_mpc.environment.expert import generate_demos
from diffusion_mpc.environment.plant import EnvConfig

TINY_HORIZON = 3
TINY_STEPS = 5


@pytest.fixture
def test_config():
    """Load test configuration"""
    config_path = Path(__file__).parent / 'fixtures' / 'test_config.yaml'
    with open(config_path, 'r') as f:
        return yaml.safe_load(f)['environments']['test']


@pytest.fixture
def temp_dir(tmp_path):
    """Create temporary directory for test files"""
    return tmp_path


@pytest.fixture
def settings_factory(test_config, temp_dir):
    """Settings for the tiny test setup with every path under the temp dir"""
    def make(**sections):
        overrides = deep_merge(test_config, {
            'paths': {
                'output_dir': str(temp_dir / 'out'),
                'checkpoint_dir': str(temp_dir / 'out' / 'checkpoints'),
                'log_dir': str(temp_dir / 'logs')
            }
        })
        return load_settings('desk', overrides=deep_merge(overrides, sections))
    return make


@pytest.fixture
def tiny_schedule():
    return cosine_schedule(TINY_STEPS)


@pytest.fixture
def tiny_dims():
    return NetworkDims(horizon=TINY_HORIZON, state_dim=4, action_dim=2, hidden=16, layers=2, embed_dim=8)


@pytest.fixture
def tiny_net(tiny_dims):
    return build_denoiser(tiny_dims, seed=0)


@pytest.fixture
def unit_normalizer():
    """Positions and desired positions on [-1, 1], actions on [-0.5, 0.5]"""
    return Normalizer(
        lower=np.array([-1.0, -1.0, -1.0, -1.0, -0.5, -0.5]),
        upper=np.array([1.0, 1.0, 1.0, 1.0, 0.5, 0.5]),
        state_dim=4
    )


def make_checkpoint(seed: int = 0, horizon: int = TINY_HORIZON, steps: int = TINY_STEPS,
                    normalizer: Normalizer = None) -> Checkpoint:
    """Untrained checkpoint small enough for closed-loop tests"""
    config = TrainConfig(
        horizon=horizon, diffusion_steps=steps, hidden=16, layers=2, embed_dim=8,
        train_steps=10, epochs=1, warmup_steps=0, seed=seed, progress=False
    )
    net = build_denoiser(config.network_dims(4, 2), seed=seed)
    net.eval()
    normalizer = normalizer or Normalizer(
        lower=np.array([-1.0, -1.0, -1.0, -1.0, -0.5, -0.5]),
        upper=np.array([1.0, 1.0, 1.0, 1.0, 0.5, 0.5]),
        state_dim=4
    )
    return Checkpoint(net=net, sched=cosine_schedule(steps), normalizer=normalizer, config=config)


@pytest.fixture
def tiny_checkpoint():
    return make_checkpoint()


@pytest.fixture
def env_config():
    return EnvConfig()


@pytest.fixture(scope='session')
def demos():
    """One expert demonstration per route"""
    return generate_demos(EnvConfig(), 8, seed=0)


@pytest.fixture
def checkpoint_factory():
    return make_checkpoint
