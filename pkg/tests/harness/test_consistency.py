import numpy as np
import pytest

from retainkv.eviction import PolicyKind
from retainkv.exceptions import ContractViolation
from retainkv.harness import CONSISTENCY_COLUMNS, consistency_curve, scorer_for

PREFIXES = [64, 128, 256, 384, 512]


@pytest.fixture
def long_tokens():
    return np.random.default_rng(21).integers(0, 64, 512).tolist()


@pytest.mark.parametrize("kind", [PolicyKind.LOCRET, PolicyKind.SIRLLM_ENTROPY])
def test_causal_scorers_agree_with_their_full_context_selves(small_weights, small_cfg, small_headset, long_tokens, kind):
    scorer = scorer_for(kind, small_weights, small_cfg, small_headset)
    report = consistency_curve(scorer, long_tokens, PREFIXES, name=kind.value)
    assert report.consistency == [1.0] * len(PREFIXES)


@pytest.mark.parametrize("kind", [PolicyKind.H2O_SUM, PolicyKind.SNAPKV_WINDOW])
def test_attention_scorers_drift_as_context_grows(small_weights, small_cfg, long_tokens, kind):
    report = consistency_curve(scorer_for(kind, small_weights, small_cfg), long_tokens, PREFIXES, name=kind.value)
    assert min(report.consistency) < 1.0
    # the full-length prefix compares the scorer with itself
    assert report.consistency[-1] == 1.0


def test_report_rows(small_weights, small_cfg, tokens):
    report = consistency_curve(scorer_for("random", small_weights, small_cfg, seed=2), tokens, [10, 96], top_frac=0.2, name="random")
    rows = report.rows()
    assert len(CONSISTENCY_COLUMNS) == len(rows[0])
    assert rows[0][:4] == ["random", 10, "mean", "mean"]
    assert len(rows) == 2 + 2 * small_cfg.n_layers * small_cfg.n_kv_heads
    assert np.asarray(report.per_head).shape == (2, 2, 2)


def test_prefix_grid_is_checked(small_weights, small_cfg, tokens):
    scorer = scorer_for("sink_recent", small_weights, small_cfg)
    with pytest.raises(ContractViolation):
        consistency_curve(scorer, tokens, [])
    with pytest.raises(ContractViolation):
        consistency_curve(scorer, tokens, [0, 10])
    with pytest.raises(ContractViolation):
        consistency_curve(scorer, tokens, [97])
