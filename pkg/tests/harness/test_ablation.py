import warnings

import pytest

from retainkv.backbone import ModelConfig, init_random
from retainkv.eviction import EvictionConfig
from retainkv.harness import ABLATION_COLUMNS, PasskeyTaskConfig, gen_passkey_set, stabilizer_ablation
from retainkv.retaining import init_headset


@pytest.fixture
def passkey_model():
    cfg = ModelConfig(n_layers=2, n_heads=4, group_size=2, d_model=64, d_head=16, d_kv=16, d_ff=32, vocab_size=37, rope_theta=100.0)
    return init_random(cfg, seed=4), cfg, init_headset(cfg, d_retain=16, seed=0)


def test_no_drift_when_the_budget_holds_the_prompt(passkey_model):
    weights, cfg, heads = passkey_model
    tasks = gen_passkey_set(PasskeyTaskConfig(haystack_len=48), n=2)
    ev = EvictionConfig(b=512, B=16, n_s=0, n_loc=8)
    report = stabilizer_ablation(weights, cfg, heads, tasks, ev, [0, 32])
    assert len(report.rows) == 4
    for row in report.rows:
        assert row.hidden_error == pytest.approx(0.0, abs=1e-12)
        assert row.cis_error == pytest.approx(0.0, abs=1e-12)
    summary = report.summary()
    assert [r.n_s for r in summary] == [0, 32] and {r.seed for r in summary} == {-1}
    assert summary[0].accuracy == report.for_seed(0)[0].accuracy * 0.5 + report.for_seed(1)[0].accuracy * 0.5
    assert len(summary[0].as_row()) == len(ABLATION_COLUMNS)


def test_parallel_ablation_matches_sequential(passkey_model):
    weights, cfg, heads = passkey_model
    tasks = gen_passkey_set(PasskeyTaskConfig(haystack_len=96, seed=7), n=3)
    ev = EvictionConfig(b=24, B=16, n_s=8, n_loc=4)
    assert stabilizer_ablation(weights, cfg, heads, tasks, ev, [0, 8], jobs=3) == stabilizer_ablation(weights, cfg, heads, tasks, ev, [0, 8])


@pytest.mark.slow
def test_stabilizers_reduce_hidden_drift(passkey_model):
    weights, cfg, heads = passkey_model
    tasks = gen_passkey_set(PasskeyTaskConfig(haystack_len=1024), n=10)
    ev = EvictionConfig(b=512, B=128, n_s=0, n_loc=128)
    report = stabilizer_ablation(weights, cfg, heads, tasks, ev, [0, 32, 128, 512], jobs=4)
    assert len(report.rows) == 40
    assert all(r.hidden_error > 0 for r in report.rows if r.n_s == 0)
    wins = sum(report.for_seed(t.seed)[0].hidden_error >= report.for_seed(t.seed)[512].hidden_error for t in tasks)
    if wins < 7:
        warnings.warn(f"n_s=0 drift exceeded n_s=512 drift in only {wins}/10 tasks", stacklevel=1)
