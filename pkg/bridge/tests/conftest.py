import numpy as np
import pytest

from unet_bridge.unet import init_checkpoint


@pytest.fixture(scope="session")
def checkpoint(tmp_path_factory):
    """A small randomly initialized checkpoint with the 64-wide feature head."""
    path = tmp_path_factory.mktemp("ckpt") / "unet.pt"
    init_checkpoint(path, seed=7, base_channels=8, feature_channels=64)
    return path


@pytest.fixture()
def rng():
    return np.random.default_rng(0)
