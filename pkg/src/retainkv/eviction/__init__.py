from retainkv.eviction.cache_pool import (
    PROTECTED_SCORE,
    STABILIZER_SCORE,
    CachePool,
    CacheUnit,
    HeadCache,
    evict_top_b,
    reassign_positions,
)
from retainkv.eviction.eviction_models import EvictionConfig, PolicyKind, StabilizerMode
from retainkv.eviction.pipeline import PrefillResult, chunked_prefill_with_eviction, decode, locret_q_prefill, prefill_prompt
from retainkv.eviction.policies import (
    AccumulatedAttentionPolicy,
    RandomPolicy,
    RetainingHeadPolicy,
    ScoringPolicy,
    SinkRecentPolicy,
    TokenEntropyPolicy,
    WindowAttentionPolicy,
    build_policy,
)
from retainkv.eviction.trace import TRACE_COLUMNS, EvictionTrace, TraceRow

__all__ = [
    "PROTECTED_SCORE",
    "STABILIZER_SCORE",
    "TRACE_COLUMNS",
    "AccumulatedAttentionPolicy",
    "CachePool",
    "CacheUnit",
    "EvictionConfig",
    "EvictionTrace",
    "HeadCache",
    "PolicyKind",
    "PrefillResult",
    "RandomPolicy",
    "RetainingHeadPolicy",
    "ScoringPolicy",
    "SinkRecentPolicy",
    "StabilizerMode",
    "TokenEntropyPolicy",
    "TraceRow",
    "WindowAttentionPolicy",
    "build_policy",
    "chunked_prefill_with_eviction",
    "decode",
    "evict_top_b",
    "locret_q_prefill",
    "prefill_prompt",
    "reassign_positions",
]
