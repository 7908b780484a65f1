import numpy as np
import pytest

from retainkv.eviction import CachePool, HeadCache, StabilizerMode, evict_top_b, reassign_positions
from retainkv.exceptions import ContractViolation


def units(positions, scores, protected=None):
    n = len(positions)
    kv = np.arange(n * 2, dtype=float).reshape(n, 2)
    return HeadCache.from_chunk(np.asarray(positions), kv, kv + 100, np.asarray(scores, dtype=float), protected)


def test_top_b_keeps_the_best_units_in_position_order():
    cache = units([0, 1, 2], [5.0, 1.0, 3.0])
    kept = evict_top_b(cache, units([3, 4], [4.0, 0.5]), b=3, n_s=0, is_last_chunk=False)
    assert kept.positions.tolist() == [0, 2, 3]
    assert kept.scores.tolist() == [5.0, 3.0, 4.0]
    assert kept.k_pre[1].tolist() == [4.0, 5.0]


def test_stabilizers_survive_non_final_steps_only():
    cache = units([0, 1, 2], [9.0, 8.0, 7.0])
    incoming = units([3, 4], [0.0, 0.1])
    assert evict_top_b(cache, incoming, b=3, n_s=2, is_last_chunk=False).positions.tolist() == [0, 3, 4]
    assert evict_top_b(cache, incoming, b=3, n_s=2, is_last_chunk=True).positions.tolist() == [0, 1, 2]


def test_stored_scores_are_not_overwritten_by_the_mask():
    kept = evict_top_b(units([], []), units([0, 1], [-1.0, -2.0]), b=2, n_s=2, is_last_chunk=False)
    assert kept.scores.tolist() == [-1.0, -2.0]


def test_persistent_stabilizers_stay_pinned():
    step1 = evict_top_b(units([], []), units([0, 1], [0.0, 0.0]), b=3, n_s=2, is_last_chunk=False, mode=StabilizerMode.PERSISTENT)
    step2 = evict_top_b(step1, units([2, 3], [5.0, 5.0]), b=3, n_s=1, is_last_chunk=False, mode=StabilizerMode.PERSISTENT)
    # the pinned units outrank a fresh score of 5; the newest unit is a stabilizer
    assert step2.positions.tolist() == [0, 1, 3]
    transient = evict_top_b(units([0, 1], [0.0, 0.0]), units([2, 3], [5.0, 5.0]), b=3, n_s=1, is_last_chunk=False)
    assert transient.positions.tolist() == [1, 2, 3]


def test_protected_units_are_never_evicted():
    cache = units([0, 1], [-5.0, -5.0], protected=np.array([True, False]))
    kept = evict_top_b(cache, units([2, 3, 4], [1.0, 2.0, 3.0]), b=2, n_s=1, is_last_chunk=True)
    assert kept.positions.tolist() == [0, 4]
    assert kept.protected.tolist() == [True, False]


def test_ties_keep_the_newer_unit():
    kept = evict_top_b(units([0, 1], [1.0, 1.0]), units([2], [1.0]), b=2, n_s=0, is_last_chunk=True)
    assert kept.positions.tolist() == [1, 2]


def test_head_cache_invariants():
    with pytest.raises(ContractViolation):
        units([1, 0], [0.0, 0.0])
    with pytest.raises(ContractViolation):
        units([0], [np.inf])


def test_reassigned_positions_are_contiguous():
    assert reassign_positions(units([3, 9, 40], [0.0, 0.0, 0.0])).tolist() == [0, 1, 2]


def test_pool_is_a_grid_of_independent_heads(small_cfg):
    pool = CachePool(small_cfg)
    assert pool.lengths().shape == (2, 2)
    pool.set_head(1, 0, units([0, 1], [0.0, 0.0]).with_scores(np.ones(2)))
    k, v = pool.kv(1, 0)
    assert k.shape == (2, 2) and v[0, 0] == 100.0
    assert pool.lengths().tolist() == [[0, 0], [2, 0]]
    assert [u.original_position for u in pool.head(1, 0).units] == [0, 1]
