"""Causal forward passes: cached chunk forward, single-pass reference, greedy decoding.

Block: pre-norm RMSNorm, grouped-query attention with 1/sqrt(d_head) scaling, residual,
RMSNorm, SiLU-gated feed-forward, residual. Final RMSNorm and unembedding give logits.
"""

import math
from collections.abc import Sequence

import numpy as np
from loguru import logger

from retainkv.backbone.backbone_models import (
    ChunkActivations,
    FullForwardResult,
    ModelConfig,
    RetainedKV,
    Weights,
)
from retainkv.exceptions import ContractViolation, DataError, PositionOverflowError
from retainkv.numerics import dtype, logsumexp, matmul, rmsnorm, rope_apply, silu, softmax_rows


class FullCache:
    """Unbounded per-(layer, KV head) cache used for full-attention decoding."""

    def __init__(self, cfg: ModelConfig):
        self._cfg = cfg
        empty = np.zeros((0, cfg.d_kv), dtype=dtype())
        self._k = [[empty] * cfg.n_kv_heads for _ in range(cfg.n_layers)]
        self._v = [[empty] * cfg.n_kv_heads for _ in range(cfg.n_layers)]

    def kv(self, layer: int, kv_head: int) -> tuple[np.ndarray, np.ndarray]:
        return self._k[layer][kv_head], self._v[layer][kv_head]

    def extend(self, acts: ChunkActivations) -> None:
        d_kv = self._cfg.d_kv
        for layer in range(self._cfg.n_layers):
            for j in range(self._cfg.n_kv_heads):
                self._k[layer][j] = np.vstack([self._k[layer][j], acts.k_head(layer, j, d_kv)])
                self._v[layer][j] = np.vstack([self._v[layer][j], acts.v_head(layer, j, d_kv)])

    def __len__(self) -> int:
        return int(self._k[0][0].shape[0])


def _check_tokens(tokens: Sequence[int] | np.ndarray, cfg: ModelConfig) -> np.ndarray:
    ids = np.asarray(tokens, dtype=np.int64).reshape(-1)
    if ids.size == 0:
        raise ContractViolation("forward pass over an empty token list")
    if ids.min() < 0 or ids.max() >= cfg.vocab_size:
        raise DataError(f"token ids must lie in [0, {cfg.vocab_size}), got [{ids.min()}, {ids.max()}]")
    return ids


def _causal_mask(n_rows: int, n_cached: int) -> np.ndarray:
    cols = np.arange(n_cached + n_rows)[None, :]
    rows = np.arange(n_rows)[:, None]
    return (cols < n_cached) | (cols - n_cached <= rows)


def _run(
    weights: Weights,
    cfg: ModelConfig,
    tokens: Sequence[int] | np.ndarray,
    pool: RetainedKV | None,
    start_virtual_position: int | None,
    keep_attention: bool,
    keep_logits: bool,
) -> FullForwardResult:
    ids = _check_tokens(tokens, cfg)
    n = ids.shape[0]
    scale = 1.0 / math.sqrt(cfg.d_head)
    x = np.array(weights.embedding[ids], dtype=dtype())
    qs, ks, vs, hidden, attention, qk_logits, lengths = [], [], [], [], [], [], []
    for layer, lw in enumerate(weights.layers):
        a = rmsnorm(x, lw.attn_norm, cfg.norm_eps)
        q_heads = [matmul(a, lw.wq[i]) for i in range(cfg.n_heads)]
        k_heads = [matmul(a, lw.wk[j]) for j in range(cfg.n_kv_heads)]
        v_heads = [matmul(a, lw.wv[j]) for j in range(cfg.n_kv_heads)]
        outs: list[np.ndarray] = [np.empty(0)] * cfg.n_heads
        layer_attention: list[np.ndarray] = [np.empty(0)] * cfg.n_heads
        layer_logits: list[np.ndarray] = [np.empty(0)] * cfg.n_heads
        layer_lengths = []
        for j in range(cfg.n_kv_heads):
            if pool is None:
                cache_k = cache_v = np.zeros((0, cfg.d_kv), dtype=x.dtype)
            else:
                cache_k, cache_v = pool.kv(layer, j)
            m = int(cache_k.shape[0])
            layer_lengths.append(m)
            base = m if start_virtual_position is None else int(start_virtual_position)
            chunk_pos = base + np.arange(n)
            if chunk_pos[-1] >= cfg.max_positions:
                raise PositionOverflowError(f"virtual position {chunk_pos[-1]} exceeds max_positions={cfg.max_positions}")
            keys = rope_apply(np.vstack([cache_k, k_heads[j]]), np.concatenate([np.arange(m), chunk_pos]), cfg.rope_theta)
            values = np.vstack([cache_v, v_heads[j]])
            mask = _causal_mask(n, m)
            for i in cfg.group(j):
                raw = matmul(rope_apply(q_heads[i], chunk_pos, cfg.rope_theta), keys.T)
                probs = softmax_rows(raw * scale, mask)
                outs[i] = matmul(probs, values)
                if keep_attention:
                    layer_attention[i] = probs
                if keep_logits:
                    layer_logits[i] = raw
        x = x + matmul(np.hstack(outs), lw.wo)
        f = rmsnorm(x, lw.ffn_norm, cfg.norm_eps)
        x = x + matmul(silu(matmul(f, lw.w_gate)) * matmul(f, lw.w_up), lw.w_down)
        qs.append(np.hstack(q_heads))
        ks.append(np.hstack(k_heads))
        vs.append(np.hstack(v_heads))
        hidden.append(x)
        lengths.append(layer_lengths)
        if keep_attention:
            attention.append(layer_attention)
        if keep_logits:
            qk_logits.append(np.stack(layer_logits))
    logits = matmul(rmsnorm(x, weights.final_norm, cfg.norm_eps), weights.unembedding)
    return FullForwardResult(
        tokens=ids,
        q=qs,
        k_pre=ks,
        v=vs,
        hidden=hidden,
        logits=logits,
        attention=attention,
        cache_lengths=lengths,
        qk_logits=qk_logits,
    )


def forward_chunk(
    weights: Weights,
    cfg: ModelConfig,
    tokens: Sequence[int] | np.ndarray,
    pool: RetainedKV | None,
    start_virtual_position: int | None = None,
    keep_attention: bool = False,
) -> ChunkActivations:
    """Run a chunk over ``[retained cache || chunk]`` without touching ``pool``.

    Cached keys sit at positions ``0..m-1`` of their (layer, KV head); the chunk continues
    at ``m`` unless ``start_virtual_position`` fixes a common base. Returned activations
    carry the chunk's pre-RoPE Q, K and V for scoring and for appending to the pool.

    Raises:
        PositionOverflowError: If a virtual position reaches ``cfg.max_positions``.
        DataError: If a token id is outside the vocabulary.
    """
    result = _run(weights, cfg, tokens, pool, start_virtual_position, keep_attention, keep_logits=False)
    return ChunkActivations(
        tokens=result.tokens,
        q=result.q,
        k_pre=result.k_pre,
        v=result.v,
        hidden=result.hidden,
        logits=result.logits,
        attention=result.attention,
        cache_lengths=result.cache_lengths,
    )


def full_forward(
    weights: Weights,
    cfg: ModelConfig,
    tokens: Sequence[int] | np.ndarray,
    keep_attention: bool = True,
    keep_logits: bool = True,
) -> FullForwardResult:
    """Single causal pass over the whole sequence; the reference for every equivalence check."""
    return _run(weights, cfg, tokens, None, None, keep_attention, keep_logits)


def token_entropy(logits_row: np.ndarray, actual_next_token: int) -> float:
    """``-log softmax(logits_row)[actual_next_token]``."""
    row = np.asarray(logits_row, dtype=np.float64).reshape(-1)
    return logsumexp(row) - float(row[int(actual_next_token)])


def greedy_generate(
    weights: Weights,
    cfg: ModelConfig,
    tokens: Sequence[int] | np.ndarray,
    max_new: int,
) -> list[int]:
    """Full-attention greedy decoding: prefill everything, then feed back each argmax."""
    if max_new < 0:
        raise ContractViolation(f"max_new must be non-negative, got {max_new}")
    cache = FullCache(cfg)
    acts = forward_chunk(weights, cfg, tokens, cache)
    cache.extend(acts)
    generated: list[int] = []
    while len(generated) < max_new:
        generated.append(int(np.argmax(acts.logits[-1])))
        if len(generated) < max_new:
            acts = forward_chunk(weights, cfg, generated[-1:], cache)
            cache.extend(acts)
    logger.debug(f"Full-attention decode produced {generated}")
    return generated
