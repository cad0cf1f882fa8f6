import numpy as np
import pytest

from fspell.model import ModelConfig, ModelParams


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def toy_config():
    """Smallest config that still exercises every architectural piece."""
    return ModelConfig(d_model=16, n_enc_layers=1, n_dec_layers=1, n_heads=2,
                       ffn_dim=32, max_frames=8, max_letters=8, dropout=0.0)


@pytest.fixture
def toy_params(toy_config):
    return ModelParams.initialized(toy_config, seed=99)
