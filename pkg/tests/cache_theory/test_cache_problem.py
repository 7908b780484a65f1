import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from retainkv.cache_theory import (
    ScoreSeq,
    SelectionTrace,
    check_budget_condition,
    check_monotone_eviction,
    exhaustive_check,
    suffix_dependent_trace,
    theorem_check,
    topb_selection_trace,
)
from retainkv.exceptions import ContractViolation

finite = st.floats(min_value=-1e6, max_value=1e6, allow_nan=False)


@given(st.lists(finite, min_size=1, max_size=40), st.integers(1, 12))
def test_top_b_selection_fits_a_bounded_cache(values, b):
    trace = topb_selection_trace(ScoreSeq.of(values), b)
    assert len(trace) == len(values)
    assert check_budget_condition(trace, b)
    assert check_monotone_eviction(trace)


def test_top_b_breaks_ties_towards_newer_items():
    trace = topb_selection_trace(ScoreSeq.of([1.0, 1.0, 1.0]), 2)
    assert trace.steps == (frozenset({0}), frozenset({0, 1}), frozenset({1, 2}))


def test_readmission_is_caught():
    trace = SelectionTrace((frozenset({0}), frozenset({1}), frozenset({0, 2})))
    assert check_budget_condition(trace, 2)
    assert not check_monotone_eviction(trace)
    assert not check_budget_condition(trace, 1)


def test_growing_scores_readmit_old_items():
    # item 0 is overtaken by item 1, then item 2 pays item 0 enough attention to bring it back
    increments = np.array([[1.0, 0.0, 5.0], [0.0, 2.0, 0.0], [0.0, 0.0, 0.5]])
    trace = suffix_dependent_trace(increments, 1)
    assert trace.steps == (frozenset({0}), frozenset({1}), frozenset({0}))
    assert not check_monotone_eviction(trace)


def test_invalid_inputs():
    with pytest.raises(ContractViolation):
        ScoreSeq.of([1.0, float("nan")])
    with pytest.raises(ContractViolation):
        SelectionTrace((frozenset({1}),))
    with pytest.raises(ContractViolation):
        topb_selection_trace(ScoreSeq.of([1.0]), 0)


def test_exhaustive_grid():
    assert exhaustive_check() == (3276, 0)


def test_randomized_check_separates_top_b_from_the_control():
    report = theorem_check(trials=1000, seed=0)
    assert report.violations_topb == 0
    assert report.violations_control >= 1
    assert report.exhaustive_cases == 3276 and report.exhaustive_violations == 0
    assert report.holds
