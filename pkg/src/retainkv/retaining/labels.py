"""Causal-importance labels read off a full, uncompressed forward pass.

For layer ``l``, KV head ``j`` and prompt position ``k`` the label is the largest
pre-softmax score ``(Q K^T)[p, k]`` over answer positions ``p`` and over the query heads
that share KV head ``j``.
"""

import math

import numpy as np

from retainkv.backbone import ChunkActivations, FullForwardResult, ModelConfig, Weights, full_forward
from retainkv.exceptions import ContractViolation
from retainkv.retaining.retaining_models import ScoreTensor, TrainingExample


def head_inputs(acts: ChunkActivations, layer: int, rows: slice | np.ndarray | None = None) -> np.ndarray:
    """Per-token retaining-head input ``[Q, K, V]`` (pre-RoPE) at ``layer``."""
    x = np.hstack([acts.q[layer], acts.k_pre[layer], acts.v[layer]])
    return x if rows is None else x[rows]


def labels_from_forward(
    fwd: FullForwardResult, cfg: ModelConfig, n_q: int, label_scaling: bool = False
) -> ScoreTensor:
    n = fwd.n_tokens
    if not fwd.qk_logits:
        raise ContractViolation("labels need a forward pass that kept its Q.K^T logits")
    if not 1 <= n_q < n:
        raise ContractViolation(f"prompt length {n_q} leaves no answer in a {n}-token sequence")
    labels = np.empty((cfg.n_layers, cfg.n_kv_heads, n_q), dtype=fwd.qk_logits[0].dtype)
    for layer, raw in enumerate(fwd.qk_logits):
        for j in range(cfg.n_kv_heads):
            group = raw[cfg.group(j).start : cfg.group(j).stop, n_q:, :n_q]
            labels[layer, j] = group.max(axis=(0, 1))
    if label_scaling:
        labels = labels / math.sqrt(cfg.d_head)
    return labels


def cis_labels(
    weights: Weights, cfg: ModelConfig, example: TrainingExample, label_scaling: bool = False
) -> ScoreTensor:
    """Labels of shape (L, h/g, n_q) for one example.

    Raises:
        ContractViolation: If the answer is empty.
    """
    if not example.answer_tokens:
        raise ContractViolation("labels need at least one answer token")
    fwd = full_forward(weights, cfg, example.tokens, keep_attention=False, keep_logits=True)
    return labels_from_forward(fwd, cfg, example.n_q, label_scaling)
