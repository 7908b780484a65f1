"""Prefix-versus-full-context agreement of a scorer's top positions."""

import math
from collections.abc import Callable, Sequence

import numpy as np
from loguru import logger
from pydantic import BaseModel

from retainkv.backbone import ModelConfig, Weights, forward_chunk
from retainkv.eviction import EvictionConfig, PolicyKind, build_policy
from retainkv.exceptions import ContractViolation
from retainkv.numerics import top_b_indices
from retainkv.retaining import HeadSet

# tokens -> (L, h/g, len(tokens)) scores computed with a full cache
Scorer = Callable[[Sequence[int]], np.ndarray]


def scorer_for(
    kind: PolicyKind | str,
    weights: Weights,
    cfg: ModelConfig,
    headset: HeadSet | None = None,
    window: int = 100,
    seed: int = 0,
) -> Scorer:
    """Score a whole sequence as one chunk over an empty cache with the named policy."""
    ev = EvictionConfig(policy=PolicyKind(kind), window=window, seed=seed, b=1, B=1, n_s=0, n_loc=0)
    policy = build_policy(ev, cfg, headset)

    def score(tokens: Sequence[int]) -> np.ndarray:
        ids = [int(t) for t in tokens]
        policy.reset()
        acts = forward_chunk(weights, cfg, ids, None, keep_attention=policy.needs_attention)
        return policy.score_chunk(acts, ids, np.arange(len(ids)))

    return score


class ConsistencyReport(BaseModel):
    scorer: str
    top_frac: float
    prefixes: list[int]
    consistency: list[float]  # mean over (layer, KV head)
    per_head: list[list[list[float]]]  # [layer][kv_head][prefix]

    def rows(self) -> list[list[object]]:
        out: list[list[object]] = [[self.scorer, m, "mean", "mean", c] for m, c in zip(self.prefixes, self.consistency, strict=True)]
        for layer, heads in enumerate(self.per_head):
            for j, curve in enumerate(heads):
                out.extend([self.scorer, m, layer, j, c] for m, c in zip(self.prefixes, curve, strict=True))
        return out


CONSISTENCY_COLUMNS = ("scorer", "prefix", "layer", "kv_head", "consistency")


def consistency_curve(
    scorer: Scorer,
    tokens: Sequence[int],
    prefixes: Sequence[int],
    top_frac: float = 0.10,
    name: str = "scorer",
) -> ConsistencyReport:
    """For each prefix ``m``: overlap of the top ``ceil(top_frac*m)`` positions scored from the
    prefix alone with the top positions among the first ``m`` scored from the full input."""
    if not prefixes:
        raise ContractViolation("consistency needs a non-empty prefix grid")
    n = len(tokens)
    if any(not 1 <= m <= n for m in prefixes):
        raise ContractViolation(f"prefix grid {list(prefixes)} leaves [1, {n}]")
    full = scorer(tokens)
    n_layers, n_kv = full.shape[:2]
    per_head = np.empty((n_layers, n_kv, len(prefixes)))
    for col, m in enumerate(prefixes):
        local = full if m == n else scorer(tokens[:m])
        k = math.ceil(top_frac * m)
        for layer in range(n_layers):
            for j in range(n_kv):
                t_local = set(top_b_indices(local[layer, j], k).tolist())
                t_global = set(top_b_indices(full[layer, j, :m], k).tolist())
                per_head[layer, j, col] = len(t_local & t_global) / len(t_local)
        logger.debug(f"{name}: prefix {m} consistency {per_head[:, :, col].mean():.4f}")
    return ConsistencyReport(
        scorer=name,
        top_frac=top_frac,
        prefixes=list(prefixes),
        consistency=per_head.mean(axis=(0, 1)).tolist(),
        per_head=per_head.tolist(),
    )
