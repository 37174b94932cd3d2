import pytest

from midiforge.config import ModelConfig
from midiforge.remi import build_vocabulary


@pytest.fixture(scope="session")
def vocab():
    return build_vocabulary()


@pytest.fixture
def tiny_config(vocab):
    return ModelConfig(
        layers=1, heads=2, model_dim=32, feedforward_dim=64,
        vocab_size=len(vocab), context_length=64, encoder_dim=16,
    )
