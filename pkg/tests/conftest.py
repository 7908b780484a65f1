"""Shared fixtures: double precision everywhere and small seeded models."""

import numpy as np
import pytest

from retainkv.backbone import ModelConfig, init_random
from retainkv.numerics import use_precision
from retainkv.retaining import init_headset


@pytest.fixture(autouse=True)
def double_precision():
    with use_precision("double"):
        yield


@pytest.fixture
def small_cfg() -> ModelConfig:
    return ModelConfig(n_layers=2, n_heads=4, group_size=2, d_model=64, d_head=16, d_kv=16, d_ff=32, vocab_size=64)


@pytest.fixture
def small_weights(small_cfg):
    return init_random(small_cfg, seed=7)


@pytest.fixture
def small_headset(small_cfg):
    return init_headset(small_cfg, d_retain=32, seed=3)


@pytest.fixture
def tokens():
    return np.random.default_rng(11).integers(0, 64, 96).tolist()
