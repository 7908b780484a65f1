import math

import numpy as np
import pytest

from retainkv.backbone import forward_chunk, full_forward, token_entropy
from retainkv.eviction import (
    CachePool,
    EvictionConfig,
    HeadCache,
    PolicyKind,
    build_policy,
    chunked_prefill_with_eviction,
)
from retainkv.exceptions import ConfigError, ContractViolation


def ev(policy, **fields):
    return EvictionConfig(**{"b": 512, "B": 16, "n_s": 0, "n_loc": 0, "policy": policy, **fields})


def test_random_policy_is_seeded(small_weights, small_cfg, tokens):
    acts = forward_chunk(small_weights, small_cfg, tokens[:8], None)
    a = build_policy(ev(PolicyKind.RANDOM, seed=4), small_cfg).score_chunk(acts, tokens[:8], np.arange(8))
    b = build_policy(ev(PolicyKind.RANDOM, seed=4), small_cfg).score_chunk(acts, tokens[:8], np.arange(8))
    assert np.array_equal(a, b)
    assert a.shape == (2, 2, 8)


def test_sink_recent_ranks_sinks_first_then_recency(small_weights, small_cfg, tokens):
    acts = forward_chunk(small_weights, small_cfg, tokens[:8], None)
    positions = np.array([0, 1, 50, 51, 52, 900, 901, 3])
    scores = build_policy(ev(PolicyKind.SINK_RECENT, sink_len=2), small_cfg).score_chunk(acts, tokens[:8], positions)[0, 0]
    assert scores[0] > scores[5] and scores[1] > scores[6]
    assert scores[6] > scores[5] > scores[2]
    assert scores[7] < scores[0]


def test_sink_recent_keeps_only_sinks_and_the_recent_window(small_weights, small_cfg, tokens):
    window = ev(PolicyKind.SINK_RECENT, b=32, B=8, sink_len=2, recent_len=6)
    result = chunked_prefill_with_eviction(small_weights, small_cfg, tokens[:40], window)
    for _, _, cache in result.pool.iter_heads():
        assert cache.positions.tolist() == [0, 1, 34, 35, 36, 37, 38, 39]
    assert build_policy(window, small_cfg).budget(32) == 8
    assert build_policy(ev(PolicyKind.SINK_RECENT), small_cfg).budget(512) == 512
    assert build_policy(ev(PolicyKind.RANDOM), small_cfg).budget(7) == 7


def test_h2o_over_two_chunks_equals_full_attention_column_sums(small_weights, small_cfg, tokens):
    ids = tokens[:24]
    result = chunked_prefill_with_eviction(small_weights, small_cfg, ids, ev(PolicyKind.H2O_SUM, B=12))
    full = full_forward(small_weights, small_cfg, ids)
    for layer in range(2):
        for j in range(2):
            expected = sum(full.attention[layer][i].sum(axis=0) for i in small_cfg.group(j))
            assert np.allclose(result.pool.head(layer, j).scores, expected, atol=1e-12)


def test_snapkv_scores_come_from_the_newest_window(small_weights, small_cfg, tokens):
    ids = tokens[:20]
    result = chunked_prefill_with_eviction(small_weights, small_cfg, ids, ev(PolicyKind.SNAPKV_WINDOW, B=20, window=5))
    full = full_forward(small_weights, small_cfg, ids)
    expected = sum(full.attention[0][i][-5:].mean(axis=0) for i in small_cfg.group(0))
    assert np.allclose(result.pool.head(0, 0).scores, expected, atol=1e-12)


def test_entropy_scores_use_the_previous_logits(small_weights, small_cfg, tokens):
    ids = tokens[:12]
    result = chunked_prefill_with_eviction(small_weights, small_cfg, ids, ev(PolicyKind.SIRLLM_ENTROPY, B=5))
    logits = full_forward(small_weights, small_cfg, ids).logits
    expected = [math.log(64)] + [token_entropy(logits[k - 1], ids[k]) for k in range(1, 12)]
    assert np.allclose(result.pool.head(1, 1).scores, expected, atol=1e-10)


def test_locret_needs_heads(small_cfg):
    with pytest.raises(ConfigError):
        build_policy(ev(PolicyKind.LOCRET), small_cfg)


def test_attention_policies_need_attention(small_weights, small_cfg, tokens):
    acts = forward_chunk(small_weights, small_cfg, tokens[:4], None)
    policy = build_policy(ev(PolicyKind.H2O_SUM), small_cfg)
    with pytest.raises(ContractViolation):
        policy.score_chunk(acts, tokens[:4], np.arange(4))
    pool = CachePool(small_cfg)
    pool.set_head(0, 0, HeadCache.from_chunk(np.array([0]), np.zeros((1, 16)), np.zeros((1, 16)), np.zeros(1)))
    with pytest.raises(ContractViolation, match="changed"):
        policy.refresh(pool, acts)


def test_budget_below_stabilizers_is_a_config_error():
    with pytest.raises(ConfigError):
        EvictionConfig(b=10, n_s=11)
