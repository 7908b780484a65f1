import numpy as np
import pytest

from retainkv.exceptions import ConfigError, ShapeError
from retainkv.retaining import AdamWState, TrainingConfig, adamw_step, lr_schedule


def test_first_adamw_step_applies_decay_then_a_unit_step():
    params = {"w": np.array([1.0, -2.0])}
    grads = {"w": np.array([0.5, -0.25])}
    new, state = adamw_step(params, grads, AdamWState.zeros_like(params), lr_t=0.1, weight_decay=0.01)
    expected = params["w"] * (1 - 0.1 * 0.01) - 0.1 * np.sign(grads["w"])
    assert np.allclose(new["w"], expected, atol=1e-7)
    assert state.step == 1
    assert params["w"].tolist() == [1.0, -2.0]


def test_adamw_rejects_mismatched_gradients():
    params = {"w": np.ones(2)}
    with pytest.raises(ShapeError):
        adamw_step(params, {"v": np.ones(2)}, AdamWState.zeros_like(params), 0.1)
    with pytest.raises(ShapeError):
        adamw_step(params, {"w": np.ones(3)}, AdamWState.zeros_like(params), 0.1)


def test_schedule_warms_up_then_decays():
    cfg = TrainingConfig(lr=1.0, total_steps=10, warmup_steps=4)
    values = [lr_schedule(t, cfg) for t in range(-1, 11)]
    assert values == [0.0, 0.0, 0.25, 0.5, 0.75, 1.0, 5 / 6, 4 / 6, 3 / 6, 2 / 6, 1 / 6, 0.0]


def test_schedule_without_warmup_starts_at_the_peak():
    assert lr_schedule(0, TrainingConfig(lr=0.5, total_steps=4, warmup_steps=0)) == 0.5


def test_warmup_longer_than_training_is_rejected():
    with pytest.raises(ConfigError):
        TrainingConfig(total_steps=10, warmup_steps=20)
