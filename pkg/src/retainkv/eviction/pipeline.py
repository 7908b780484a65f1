"""Chunked prefill with budgeted eviction, query-aware prefill and cached decoding."""

from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np
from loguru import logger

from retainkv.backbone import ChunkActivations, ModelConfig, Weights, forward_chunk
from retainkv.eviction.cache_pool import CachePool, HeadCache, evict_top_b
from retainkv.eviction.eviction_models import EvictionConfig, PolicyKind
from retainkv.eviction.policies import ScoringPolicy, build_policy
from retainkv.eviction.trace import EvictionTrace
from retainkv.exceptions import ConfigError, ContractViolation
from retainkv.numerics import softmax_rows
from retainkv.retaining import HeadSet


@dataclass
class PrefillResult:
    """State after prefill. ``decode`` keeps appending to ``pool`` and ``policy``."""

    pool: CachePool
    logits: np.ndarray  # final prompt token
    last_hidden: np.ndarray  # final layer, final prompt token
    layer_hidden: list[np.ndarray]  # every layer, final prompt token
    policy: ScoringPolicy
    n_tokens: int
    steps: int


def _incoming(acts: ChunkActivations, cfg: ModelConfig, layer: int, j: int, positions, scores, protected_prefix: int) -> HeadCache:
    return HeadCache.from_chunk(
        positions,
        acts.k_head(layer, j, cfg.d_kv),
        acts.v_head(layer, j, cfg.d_kv),
        scores[layer, j],
        protected=positions < protected_prefix,
    )


def _process(
    weights: Weights,
    cfg: ModelConfig,
    policy: ScoringPolicy,
    pool: CachePool,
    tokens: Sequence[int],
    positions: np.ndarray,
) -> tuple[ChunkActivations, np.ndarray]:
    acts = forward_chunk(weights, cfg, tokens, pool, keep_attention=policy.needs_attention)
    policy.refresh(pool, acts)
    return acts, policy.score_chunk(acts, tokens, positions)


def chunked_prefill_with_eviction(
    weights: Weights,
    cfg: ModelConfig,
    tokens: Sequence[int],
    ev: EvictionConfig,
    headset: HeadSet | None = None,
    *,
    policy: ScoringPolicy | None = None,
    trace: EvictionTrace | None = None,
    protected_prefix: int = 0,
) -> PrefillResult:
    """Prefill ``tokens`` in chunks of ``ev.B`` keeping at most ``ev.b`` units per head.

    The last ``ev.n_loc`` tokens are appended without eviction after the evicting
    stage; a prompt no longer than ``n_loc`` is entirely local. The first
    ``protected_prefix`` tokens are never evicted.

    Raises:
        ContractViolation: If ``tokens`` is empty.
        ConfigError: If a retaining-head policy is requested without heads, or
            ``locret_q`` without a protected query prefix.
    """
    ids = [int(t) for t in tokens]
    if not ids:
        raise ContractViolation("prefill over an empty token list")
    policy = policy or build_policy(ev, cfg, headset)
    if policy.kind is PolicyKind.LOCRET_Q and protected_prefix == 0:
        raise ConfigError("policy locret_q prefills query || context; pass the query through locret_q_prefill")
    policy.reset()
    if ev.n_s + ev.B > ev.b and len(ids) > ev.n_loc + ev.b:
        logger.warning(f"n_s={ev.n_s} plus B={ev.B} exceed b={ev.b}; stabilizers crowd out scored units")
    b = policy.budget(ev.b)
    pool = CachePool(cfg)
    split = len(ids) - min(ev.n_loc, len(ids))
    step = 0
    acts = None
    for start in range(0, split, ev.B):
        end = min(start + ev.B, split)
        positions = np.arange(start, end)
        acts, scores = _process(weights, cfg, policy, pool, ids[start:end], positions)
        is_last = end == split
        for layer in range(cfg.n_layers):
            for j in range(cfg.n_kv_heads):
                before = pool.head(layer, j)
                incoming = _incoming(acts, cfg, layer, j, positions, scores, protected_prefix)
                after = evict_top_b(before, incoming, b, ev.n_s, is_last, ev.stabilizer_mode)
                pool.set_head(layer, j, after)
                if trace is not None:
                    trace.record(step, layer, j, before.concat(incoming), after)
        logger.debug(f"Chunk {step} [{start}, {end}) cache lengths {pool.lengths().ravel().tolist()}")
        step += 1
    if split < len(ids):
        positions = np.arange(split, len(ids))
        acts, scores = _process(weights, cfg, policy, pool, ids[split:], positions)
        for layer in range(cfg.n_layers):
            for j in range(cfg.n_kv_heads):
                joined = pool.head(layer, j).concat(_incoming(acts, cfg, layer, j, positions, scores, protected_prefix))
                pool.set_head(layer, j, joined)
                if trace is not None:
                    trace.record(step, layer, j, joined, joined)
        step += 1
    assert acts is not None
    logger.info(f"Prefilled {len(ids)} tokens in {step} steps with {policy.kind.value}; cache {pool.lengths().max()} units/head")
    return PrefillResult(
        pool=pool,
        logits=np.array(acts.logits[-1]),
        last_hidden=np.array(acts.hidden[-1][-1]),
        layer_hidden=[np.array(h[-1]) for h in acts.hidden],
        policy=policy,
        n_tokens=len(ids),
        steps=step,
    )


def locret_q_prefill(
    weights: Weights,
    cfg: ModelConfig,
    query_tokens: Sequence[int],
    context_tokens: Sequence[int],
    ev: EvictionConfig,
    headset: HeadSet | None = None,
    *,
    policy: ScoringPolicy | None = None,
    trace: EvictionTrace | None = None,
) -> PrefillResult:
    """Prefill ``query || context`` with the query units protected from eviction.

    Raises:
        ContractViolation: If the query is empty.
        ConfigError: If the query plus the stabilizers do not fit the budget.
    """
    if not query_tokens:
        raise ContractViolation("query-aware prefill needs a non-empty query")
    q = len(query_tokens)
    if q + ev.n_s > ev.b:
        raise ConfigError(f"query length {q} plus n_s={ev.n_s} exceeds the budget b={ev.b}")
    tokens = list(query_tokens) + list(context_tokens)
    return chunked_prefill_with_eviction(weights, cfg, tokens, ev, headset, policy=policy, trace=trace, protected_prefix=q)


def prefill_prompt(
    weights: Weights,
    cfg: ModelConfig,
    prompt: Sequence[int],
    ev: EvictionConfig,
    headset: HeadSet | None = None,
    *,
    query_len: int | None = None,
    trace: EvictionTrace | None = None,
) -> PrefillResult:
    """Prefill a prompt whose last ``query_len`` tokens are the question.

    ``locret_q`` copies the question in front of the prompt and protects it; every
    other policy prefills the prompt as is.

    Raises:
        ConfigError: If ``locret_q`` is requested without a question length.
    """
    if ev.policy is not PolicyKind.LOCRET_Q:
        return chunked_prefill_with_eviction(weights, cfg, prompt, ev, headset, trace=trace)
    if not query_len:
        raise ConfigError("policy locret_q needs the length of the prompt's question")
    ids = list(prompt)
    return locret_q_prefill(weights, cfg, ids[len(ids) - query_len :], ids, ev, headset, trace=trace)


def decode(
    weights: Weights,
    cfg: ModelConfig,
    prefill: PrefillResult,
    max_new: int,
    greedy: bool = True,
    seed: int = 0,
) -> list[int]:
    """Generate ``max_new`` tokens over the retained cache without further eviction.

    Every generated token, the last included, is fed back and appended to each head, so
    the cache grows by exactly ``max_new`` units per head.

    Raises:
        ContractViolation: If ``max_new`` is negative.
    """
    if max_new < 0:
        raise ContractViolation(f"max_new must be non-negative, got {max_new}")
    rng = np.random.default_rng(seed)
    pool, policy = prefill.pool, prefill.policy
    logits = prefill.logits
    position = prefill.n_tokens
    generated: list[int] = []
    for _ in range(max_new):
        if greedy:
            token = int(np.argmax(logits))
        else:
            probs = softmax_rows(np.asarray(logits, dtype=np.float64)[None, :])[0]
            token = int(rng.choice(len(probs), p=probs / probs.sum()))
        generated.append(token)
        positions = np.array([position])
        acts, scores = _process(weights, cfg, policy, pool, [token], positions)
        for layer in range(cfg.n_layers):
            for j in range(cfg.n_kv_heads):
                pool.set_head(layer, j, pool.head(layer, j).concat(_incoming(acts, cfg, layer, j, positions, scores, 0)))
        logits = acts.logits[-1]
        position += 1
    logger.debug(f"Decoded {generated}")
    return generated
