import numpy as np
import pytest

from retainkv.backbone import (
    FullCache,
    ModelConfig,
    forward_chunk,
    full_forward,
    greedy_generate,
    init_random,
    replicate_kv_heads,
    token_entropy,
)
from retainkv.exceptions import ContractViolation, DataError, PositionOverflowError


def chunked_logits(weights, cfg, tokens, size):
    cache = FullCache(cfg)
    rows = []
    for start in range(0, len(tokens), size):
        acts = forward_chunk(weights, cfg, tokens[start : start + size], cache)
        cache.extend(acts)
        rows.append(acts.logits)
    return np.vstack(rows), cache


@pytest.mark.parametrize("size", [1, 5, 32, 96])
def test_chunked_forward_reproduces_the_full_pass(small_weights, small_cfg, tokens, size):
    full = full_forward(small_weights, small_cfg, tokens)
    logits, cache = chunked_logits(small_weights, small_cfg, tokens, size)
    assert len(cache) == len(tokens)
    assert np.allclose(logits, full.logits, rtol=1e-12, atol=1e-12)


def test_full_forward_is_causal(small_weights, small_cfg, tokens):
    full = full_forward(small_weights, small_cfg, tokens)
    prefix = full_forward(small_weights, small_cfg, tokens[:40])
    assert np.array_equal(full.logits[:40], prefix.logits)


def test_attention_rows_are_distributions(small_weights, small_cfg, tokens):
    full = full_forward(small_weights, small_cfg, tokens[:20])
    for layer in full.attention:
        for probs in layer:
            assert np.allclose(probs.sum(axis=1), 1.0)
            assert np.allclose(np.triu(probs, 1), 0.0)


def test_qk_logits_shape(small_weights, small_cfg, tokens):
    full = full_forward(small_weights, small_cfg, tokens[:12])
    assert full.qk_logits[0].shape == (small_cfg.n_heads, 12, 12)


def test_replicated_kv_heads_give_the_same_model(small_weights, small_cfg, tokens):
    mha_weights, mha_cfg = replicate_kv_heads(small_weights, small_cfg)
    assert mha_cfg.group_size == 1
    a = full_forward(small_weights, small_cfg, tokens[:30]).logits
    b = full_forward(mha_weights, mha_cfg, tokens[:30]).logits
    assert np.allclose(a, b, atol=1e-12)


def test_greedy_generate_follows_the_argmax(small_weights, small_cfg, tokens):
    out = greedy_generate(small_weights, small_cfg, tokens[:10], 3)
    assert len(out) == 3
    assert out[0] == int(np.argmax(full_forward(small_weights, small_cfg, tokens[:10]).logits[-1]))
    again = full_forward(small_weights, small_cfg, tokens[:10] + out[:2]).logits[-1]
    assert out[2] == int(np.argmax(again))
    assert greedy_generate(small_weights, small_cfg, tokens[:10], 0) == []


def test_token_entropy_of_a_uniform_row():
    assert token_entropy(np.zeros(8), 3) == pytest.approx(np.log(8))


def test_bad_tokens(small_weights, small_cfg):
    with pytest.raises(ContractViolation):
        full_forward(small_weights, small_cfg, [])
    with pytest.raises(DataError):
        full_forward(small_weights, small_cfg, [0, 64])


def test_position_overflow():
    cfg = ModelConfig(n_layers=1, n_heads=2, group_size=1, d_model=16, d_head=8, d_kv=8, d_ff=8, vocab_size=8, max_positions=4)
    weights = init_random(cfg, 0)
    forward_chunk(weights, cfg, [1, 2, 3, 4], None)
    with pytest.raises(PositionOverflowError):
        forward_chunk(weights, cfg, [1, 2, 3, 4, 5], None)
    with pytest.raises(PositionOverflowError):
        forward_chunk(weights, cfg, [1], None, start_virtual_position=4)
