import numpy as np
import pytest

from retainkv.backbone import weights_hash
from retainkv.exceptions import DataError, ShapeError
from retainkv.retaining import (
    HeadSet,
    TrainingConfig,
    TrainingExample,
    init_headset,
    load_headset,
    save_headset,
    train,
)


@pytest.fixture
def dataset():
    rng = np.random.default_rng(5)
    return [TrainingExample(prompt=rng.integers(0, 64, 30).tolist(), answer=rng.integers(0, 64, 4).tolist()) for _ in range(8)]


@pytest.mark.slow
def test_training_lowers_the_loss_and_leaves_the_backbone_alone(small_weights, small_cfg, small_headset, dataset):
    cfg = TrainingConfig(lr=5e-3, total_steps=300, warmup_steps=50, log_every=100)
    before = weights_hash(small_weights)
    result = train(small_headset, small_weights, small_cfg, dataset, cfg, seed=0)
    losses = [p.loss for p in result.loss_curve]
    assert len(losses) == 300
    assert np.mean(losses[-20:]) < np.mean(losses[:20])
    assert result.backbone_hash == before == weights_hash(small_weights)


def test_training_is_deterministic(small_weights, small_cfg, small_headset, dataset):
    cfg = TrainingConfig(lr=1e-3, total_steps=5, warmup_steps=2)
    a = train(small_headset, small_weights, small_cfg, dataset, cfg, seed=1)
    b = train(small_headset, small_weights, small_cfg, dataset, cfg, seed=1)
    assert [p.loss for p in a.loss_curve] == [p.loss for p in b.loss_curve]
    assert np.array_equal(a.headset[0].w1, b.headset[0].w1)


def test_empty_dataset(small_weights, small_cfg, small_headset):
    with pytest.raises(DataError):
        train(small_headset, small_weights, small_cfg, [], TrainingConfig(total_steps=1, warmup_steps=0), seed=0)


def test_headset_round_trip(tmp_path, small_cfg, small_headset):
    path = save_headset(tmp_path / "h.rkv", small_headset, small_cfg)
    loaded = load_headset(path)
    assert len(loaded) == small_cfg.n_layers
    assert np.array_equal(loaded[1].w2, small_headset[1].w2)


def test_headset_shape_check(small_cfg):
    other = init_headset(small_cfg.model_copy(update={"n_layers": 3}), d_retain=4, seed=0)
    with pytest.raises(ShapeError):
        other.check(small_cfg)
    with pytest.raises(ShapeError):
        HeadSet(other.heads[:2]).check(small_cfg.model_copy(update={"group_size": 1}))
