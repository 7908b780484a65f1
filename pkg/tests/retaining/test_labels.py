import numpy as np
import pytest

from retainkv.backbone import full_forward
from retainkv.backbone import build_matched_filter, matched_filter_config
from retainkv.exceptions import ContractViolation
from retainkv.harness import PasskeyTaskConfig, gen_passkey
from retainkv.retaining import TrainingExample, cis_labels, head_input_width, head_inputs, labels_from_forward


def test_labels_are_the_max_over_answer_rows_and_group_heads(small_weights, small_cfg, tokens):
    example = TrainingExample(prompt=tokens[:20], answer=tokens[20:26])
    labels = cis_labels(small_weights, small_cfg, example)
    assert labels.shape == (small_cfg.n_layers, small_cfg.n_kv_heads, 20)
    raw = full_forward(small_weights, small_cfg, example.tokens).qk_logits[1]
    assert labels[1, 1, 4] == raw[2:4, 20:, 4].max()


def test_label_scaling_divides_by_sqrt_d_head(small_weights, small_cfg, tokens):
    example = TrainingExample(prompt=tokens[:10], answer=tokens[10:12])
    plain = cis_labels(small_weights, small_cfg, example)
    scaled = cis_labels(small_weights, small_cfg, example, label_scaling=True)
    assert np.allclose(scaled, plain / 4.0)


def test_labels_need_an_answer(small_weights, small_cfg, tokens):
    fwd = full_forward(small_weights, small_cfg, tokens[:10])
    with pytest.raises(ContractViolation):
        labels_from_forward(fwd, small_cfg, n_q=10)
    with pytest.raises(ContractViolation):
        TrainingExample(prompt=tokens[:10], answer=[])


def test_head_inputs_concatenate_q_k_v(small_weights, small_cfg, tokens):
    fwd = full_forward(small_weights, small_cfg, tokens[:10])
    x = head_inputs(fwd, 0, slice(0, 4))
    assert x.shape == (4, head_input_width(small_cfg))
    assert np.array_equal(x[:, : small_cfg.n_heads * small_cfg.d_head], fwd.q[0][:4])


def test_matched_filter_labels_single_out_the_needle():
    task = PasskeyTaskConfig(haystack_len=64, needle_len=4)
    cfg = matched_filter_config(task.vocab.vocab_size)
    weights = build_matched_filter(cfg, layout=task.vocab)
    passkey = gen_passkey(task, 3)
    labels = cis_labels(weights, cfg, passkey.example)[0, 0]
    needle = passkey.needle_positions
    others = np.setdiff1d(np.arange(len(labels)), needle)
    assert labels[needle].min() > 100.0
    assert np.abs(labels[others]).max() < 1.0
