"""Budgeted per-(layer, KV head) cache pool and the top-b eviction step."""

from dataclasses import dataclass

import numpy as np

from retainkv.backbone import ModelConfig
from retainkv.eviction.eviction_models import StabilizerMode
from retainkv.exceptions import ContractViolation, ShapeError
from retainkv.numerics import dtype, top_b_indices

# Masked-score tiers: stabilizers outrank every stored score, protected units outrank stabilizers.
STABILIZER_SCORE = float(np.finfo(np.float64).max)
PROTECTED_SCORE = float("inf")


@dataclass(frozen=True)
class CacheUnit:
    original_position: int
    k_pre_rope: np.ndarray
    v: np.ndarray
    score: float


@dataclass(frozen=True)
class HeadCache:
    """Struct-of-arrays cache of one (layer, KV head), sorted by original position.

    ``pinned`` marks units masked as permanent: protected query units, and past
    stabilizers in persistent mode.
    """

    positions: np.ndarray
    k_pre: np.ndarray
    v: np.ndarray
    scores: np.ndarray
    pinned: np.ndarray
    protected: np.ndarray

    def __post_init__(self) -> None:
        m = self.positions.shape[0]
        for name in ("k_pre", "v", "scores", "pinned", "protected"):
            if getattr(self, name).shape[0] != m:
                raise ShapeError(f"head cache field {name} has {getattr(self, name).shape[0]} rows, expected {m}")
        if m > 1 and not (np.diff(self.positions) > 0).all():
            raise ContractViolation("cache units must have strictly increasing original positions")
        if not np.isfinite(self.scores).all():
            raise ContractViolation("stored scores must be finite")

    @classmethod
    def empty(cls, d_kv: int) -> "HeadCache":
        return cls(
            positions=np.zeros(0, dtype=np.int64),
            k_pre=np.zeros((0, d_kv), dtype=dtype()),
            v=np.zeros((0, d_kv), dtype=dtype()),
            scores=np.zeros(0, dtype=np.float64),
            pinned=np.zeros(0, dtype=bool),
            protected=np.zeros(0, dtype=bool),
        )

    @classmethod
    def from_chunk(
        cls,
        positions: np.ndarray,
        k_pre: np.ndarray,
        v: np.ndarray,
        scores: np.ndarray,
        protected: np.ndarray | None = None,
    ) -> "HeadCache":
        n = len(positions)
        protected = np.zeros(n, dtype=bool) if protected is None else np.asarray(protected, dtype=bool)
        return cls(
            positions=np.asarray(positions, dtype=np.int64),
            k_pre=np.asarray(k_pre),
            v=np.asarray(v),
            scores=np.asarray(scores, dtype=np.float64),
            pinned=protected.copy(),
            protected=protected,
        )

    def __len__(self) -> int:
        return int(self.positions.shape[0])

    @property
    def units(self) -> list[CacheUnit]:
        return [
            CacheUnit(int(p), self.k_pre[r], self.v[r], float(self.scores[r]))
            for r, p in enumerate(self.positions)
        ]

    def concat(self, incoming: "HeadCache") -> "HeadCache":
        return HeadCache(
            positions=np.concatenate([self.positions, incoming.positions]),
            k_pre=np.vstack([self.k_pre, incoming.k_pre]),
            v=np.vstack([self.v, incoming.v]),
            scores=np.concatenate([self.scores, incoming.scores]),
            pinned=np.concatenate([self.pinned, incoming.pinned]),
            protected=np.concatenate([self.protected, incoming.protected]),
        )

    def select(self, rows: np.ndarray, pinned: np.ndarray | None = None) -> "HeadCache":
        pinned = self.pinned if pinned is None else pinned
        return HeadCache(
            positions=self.positions[rows],
            k_pre=self.k_pre[rows],
            v=self.v[rows],
            scores=self.scores[rows],
            pinned=pinned[rows],
            protected=self.protected[rows],
        )

    def with_scores(self, scores: np.ndarray) -> "HeadCache":
        return HeadCache(self.positions, self.k_pre, self.v, np.asarray(scores, dtype=np.float64), self.pinned, self.protected)

    def masked_scores(self, n_s: int, is_last_chunk: bool) -> np.ndarray:
        masked = self.scores.copy()
        masked[self.pinned] = STABILIZER_SCORE
        if not is_last_chunk and n_s > 0:
            masked[-n_s:] = STABILIZER_SCORE
        masked[self.protected] = PROTECTED_SCORE
        return masked


def reassign_positions(cache: HeadCache) -> np.ndarray:
    """RoPE positions of the retained units: unit ``r`` sits at position ``r``."""
    return np.arange(len(cache))


def evict_top_b(
    cache: HeadCache,
    incoming: HeadCache,
    b: int,
    n_s: int,
    is_last_chunk: bool,
    mode: StabilizerMode = StabilizerMode.TRANSIENT,
) -> HeadCache:
    """Concatenate ``incoming`` and keep the top ``b`` units by masked score.

    Except on the last chunk, the newest ``n_s`` units are masked as stabilizers. The
    mask is applied to a copy; stored scores keep their finite values. Ties go to the
    newer unit.
    """
    joined = cache.concat(incoming)
    keep = top_b_indices(joined.masked_scores(n_s, is_last_chunk), b)
    pinned = None
    if mode is StabilizerMode.PERSISTENT and not is_last_chunk and n_s > 0:
        pinned = joined.pinned.copy()
        pinned[-n_s:] = True
    return joined.select(keep, pinned)


class CachePool:
    """Grid of :class:`HeadCache`, one per (layer, KV head); lengths may differ."""

    def __init__(self, cfg: ModelConfig):
        self.cfg = cfg
        self._heads = [[HeadCache.empty(cfg.d_kv) for _ in range(cfg.n_kv_heads)] for _ in range(cfg.n_layers)]

    def head(self, layer: int, kv_head: int) -> HeadCache:
        return self._heads[layer][kv_head]

    def set_head(self, layer: int, kv_head: int, cache: HeadCache) -> None:
        self._heads[layer][kv_head] = cache

    def kv(self, layer: int, kv_head: int) -> tuple[np.ndarray, np.ndarray]:
        cache = self._heads[layer][kv_head]
        return cache.k_pre, cache.v

    def lengths(self) -> np.ndarray:
        return np.array([[len(c) for c in row] for row in self._heads], dtype=np.int64)

    def iter_heads(self):
        for layer, row in enumerate(self._heads):
            for j, cache in enumerate(row):
                yield layer, j, cache
