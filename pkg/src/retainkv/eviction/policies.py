"""Scoring policies: the trained retaining heads and the baseline heuristics.

A policy turns one chunk's activations into a score per (layer, KV head, chunk token).
Causal policies never revisit a stored score. Non-causal ones (``h2o_sum``,
``snapkv_window``) also rewrite the stored scores of retained units from the attention
the new chunk pays them, through :meth:`ScoringPolicy.refresh`.
"""

import math
from abc import ABC, abstractmethod
from collections.abc import Sequence

import numpy as np

from retainkv.backbone import ChunkActivations, ModelConfig, token_entropy
from retainkv.eviction.cache_pool import CachePool
from retainkv.eviction.eviction_models import EvictionConfig, PolicyKind
from retainkv.exceptions import ConfigError, ContractViolation
from retainkv.retaining import HeadSet, head_inputs, predict_layer


class ScoringPolicy(ABC):
    kind: PolicyKind
    causal = True
    needs_attention = False

    def __init__(self, cfg: ModelConfig):
        self.cfg = cfg
        self.step = 0

    def reset(self) -> None:
        self.step = 0

    @abstractmethod
    def _score(self, acts: ChunkActivations, tokens: Sequence[int], positions: np.ndarray) -> np.ndarray:
        """Scores of shape (L, h/g, n) for the chunk tokens."""

    def score_chunk(self, acts: ChunkActivations, tokens: Sequence[int], positions: np.ndarray) -> np.ndarray:
        if self.needs_attention and not acts.attention:
            raise ContractViolation(f"{self.kind.value} needs a forward pass that kept attention")
        scores = np.asarray(self._score(acts, tokens, positions), dtype=np.float64)
        self.step += 1
        return scores

    def budget(self, b: int) -> int:
        """Units per head kept under a configured budget of ``b``."""
        return b

    def refresh(self, pool: CachePool, acts: ChunkActivations) -> None:
        """Update stored scores of units already in ``pool``. No-op for causal policies."""

    def _group_attention(self, acts: ChunkActivations, layer: int, kv_head: int) -> np.ndarray:
        """Attention of the group's query heads over ``[cache || chunk]``, (g, n, m + n)."""
        if not acts.attention:
            raise ContractViolation(f"{self.kind.value} needs a forward pass that kept attention")
        return np.stack([acts.attention[layer][i] for i in self.cfg.group(kv_head)]).astype(np.float64)


class RetainingHeadPolicy(ScoringPolicy):
    kind = PolicyKind.LOCRET

    def __init__(self, cfg: ModelConfig, headset: HeadSet, kind: PolicyKind = PolicyKind.LOCRET):
        super().__init__(cfg)
        self.headset = headset.check(cfg)
        self.kind = kind

    def _score(self, acts, tokens, positions):
        return np.stack([predict_layer(self.headset[layer], head_inputs(acts, layer)).T for layer in range(self.cfg.n_layers)])


class RandomPolicy(ScoringPolicy):
    """Uniform scores from a generator seeded by ``(seed, step)``."""

    kind = PolicyKind.RANDOM

    def __init__(self, cfg: ModelConfig, seed: int):
        super().__init__(cfg)
        self.seed = seed

    def _score(self, acts, tokens, positions):
        rng = np.random.default_rng([self.seed, self.step])
        return rng.random((self.cfg.n_layers, self.cfg.n_kv_heads, len(positions)))


class SinkRecentPolicy(ScoringPolicy):
    """Attention sinks first, then recency: ``2*[pos < sink_len] + pos/(pos+1)``.

    The cache holds at most ``sink_len + recent_len`` units per head, so once the prompt
    outgrows it only the sinks and the ``recent_len`` newest units remain.
    """

    kind = PolicyKind.SINK_RECENT

    def __init__(self, cfg: ModelConfig, sink_len: int, recent_len: int):
        super().__init__(cfg)
        self.sink_len = sink_len
        self.recent_len = recent_len

    def budget(self, b: int) -> int:
        return min(b, max(1, self.sink_len + self.recent_len))

    def _score(self, acts, tokens, positions):
        pos = np.asarray(positions, dtype=np.float64)
        row = 2.0 * (pos < self.sink_len) + pos / (pos + 1.0)
        return np.broadcast_to(row, (self.cfg.n_layers, self.cfg.n_kv_heads, len(pos))).copy()


class AccumulatedAttentionPolicy(ScoringPolicy):
    """Heavy hitters: attention each unit received, summed over queries and group heads."""

    kind = PolicyKind.H2O_SUM
    causal = False
    needs_attention = True

    def _received(self, acts: ChunkActivations, layer: int, kv_head: int) -> np.ndarray:
        return self._group_attention(acts, layer, kv_head).sum(axis=(0, 1))

    def _score(self, acts, tokens, positions):
        out = np.empty((self.cfg.n_layers, self.cfg.n_kv_heads, len(positions)))
        for layer in range(self.cfg.n_layers):
            for j in range(self.cfg.n_kv_heads):
                m = acts.cache_lengths[layer][j]
                out[layer, j] = self._received(acts, layer, j)[m:]
        return out

    def refresh(self, pool: CachePool, acts: ChunkActivations) -> None:
        for layer, j, cache in pool.iter_heads():
            m = acts.cache_lengths[layer][j]
            if m != len(cache):
                raise ContractViolation(f"cache ({layer}, {j}) changed between forward and refresh")
            if m:
                pool.set_head(layer, j, cache.with_scores(self._combine(cache.scores, self._received(acts, layer, j)[:m])))

    def _combine(self, stored: np.ndarray, received: np.ndarray) -> np.ndarray:
        return stored + received


class WindowAttentionPolicy(AccumulatedAttentionPolicy):
    """Observation-window voting: mean attention from the newest ``window`` queries of the
    chunk, summed over group heads. Stored scores are replaced, not accumulated."""

    kind = PolicyKind.SNAPKV_WINDOW

    def __init__(self, cfg: ModelConfig, window: int):
        super().__init__(cfg)
        self.window = window

    def _received(self, acts, layer, kv_head):
        return self._group_attention(acts, layer, kv_head)[:, -self.window :, :].mean(axis=1).sum(axis=0)

    def _combine(self, stored, received):
        return received


class TokenEntropyPolicy(ScoringPolicy):
    """Token ``k`` scores ``-log p(x_k | x_<k)`` from the logits at ``k-1``. The first
    token of the sequence has no predictor and scores ``log V``."""

    kind = PolicyKind.SIRLLM_ENTROPY

    def __init__(self, cfg: ModelConfig):
        super().__init__(cfg)
        self._previous_logits: np.ndarray | None = None

    def reset(self) -> None:
        super().reset()
        self._previous_logits = None

    def _score(self, acts, tokens, positions):
        ids = [int(t) for t in tokens]
        row = np.empty(len(ids))
        for r, token in enumerate(ids):
            if r:
                row[r] = token_entropy(acts.logits[r - 1], token)
            elif self._previous_logits is not None:
                row[r] = token_entropy(self._previous_logits, token)
            else:
                row[r] = math.log(self.cfg.vocab_size)
        self._previous_logits = np.array(acts.logits[-1])
        return np.broadcast_to(row, (self.cfg.n_layers, self.cfg.n_kv_heads, len(ids))).copy()


def build_policy(ev: EvictionConfig, cfg: ModelConfig, headset: HeadSet | None = None) -> ScoringPolicy:
    """Instantiate the policy named by ``ev.policy``.

    Raises:
        ConfigError: If a retaining-head policy is requested without heads.
    """
    kind = ev.policy
    if kind in (PolicyKind.LOCRET, PolicyKind.LOCRET_Q):
        if headset is None:
            raise ConfigError(f"policy {kind.value} needs trained retaining heads")
        return RetainingHeadPolicy(cfg, headset, kind)
    if kind is PolicyKind.RANDOM:
        return RandomPolicy(cfg, ev.seed)
    if kind is PolicyKind.SINK_RECENT:
        return SinkRecentPolicy(cfg, ev.sink_len, ev.recent_len)
    if kind is PolicyKind.H2O_SUM:
        return AccumulatedAttentionPolicy(cfg)
    if kind is PolicyKind.SNAPKV_WINDOW:
        return WindowAttentionPolicy(cfg, ev.window)
    return TokenEntropyPolicy(cfg)
