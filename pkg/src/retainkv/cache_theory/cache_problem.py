"""Top-b selection over a causal score stream, checked against the cache-problem conditions.

A selection trace lists, for every step ``m`` (0-based), the set of indices kept after the
first ``m + 1`` items arrived. It describes a computation that fits a bounded cache when

1. every set holds at most ``b`` indices, and
2. whatever a later set adds over an earlier one comes from the items that arrived in
   between, i.e. an evicted index is never readmitted.

Top-b selection over fixed per-item scores satisfies both. A scorer whose value for an
old item keeps moving as new items arrive does not.
"""

import itertools
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np
from loguru import logger
from pydantic import BaseModel

from retainkv.exceptions import ContractViolation
from retainkv.numerics import top_b_indices


@dataclass(frozen=True)
class ScoreSeq:
    values: tuple[float, ...]

    def __post_init__(self) -> None:
        if not np.isfinite(np.asarray(self.values, dtype=np.float64)).all():
            raise ContractViolation("score sequences must be finite")

    @classmethod
    def of(cls, values: Sequence[float]) -> "ScoreSeq":
        return cls(tuple(float(v) for v in values))

    def __len__(self) -> int:
        return len(self.values)


@dataclass(frozen=True)
class SelectionTrace:
    steps: tuple[frozenset[int], ...]

    def __post_init__(self) -> None:
        for m, selected in enumerate(self.steps):
            if any(i < 0 or i > m for i in selected):
                raise ContractViolation(f"step {m} selects {sorted(selected)} outside 0..{m}")

    def __len__(self) -> int:
        return len(self.steps)


def topb_selection_trace(scores: ScoreSeq, b: int) -> SelectionTrace:
    """Step ``m`` keeps the ``b`` best of items ``0..m`` by (score, index)."""
    if b < 1:
        raise ContractViolation(f"budget must be at least 1, got {b}")
    values = np.asarray(scores.values, dtype=np.float64)
    steps = tuple(frozenset(int(i) for i in top_b_indices(values[: m + 1], b)) for m in range(len(values)))
    return SelectionTrace(steps)


def check_budget_condition(trace: SelectionTrace, b: int) -> bool:
    return all(len(selected) <= b for selected in trace.steps)


def check_monotone_eviction(trace: SelectionTrace) -> bool:
    """For every ``m1 < m2``, ``Sel(m2) - Sel(m1)`` lies in ``m1+1..m2``.

    Checked on consecutive steps: a readmission between ``m1`` and ``m2`` shows up as
    some step adding an index other than its own.
    """
    for m in range(1, len(trace.steps)):
        if not trace.steps[m] - trace.steps[m - 1] <= {m}:
            return False
    return True


def suffix_dependent_trace(increments: np.ndarray, b: int) -> SelectionTrace:
    """Control scorer: item ``k``'s score at step ``m`` is ``sum(increments[k, k..m])``.

    Scores of old items keep growing as new ones arrive, the way accumulated attention
    does, so the selection at each step is recomputed from scratch over all items.
    """
    running = np.cumsum(np.triu(np.asarray(increments, dtype=np.float64)), axis=1)
    steps = tuple(
        frozenset(int(i) for i in top_b_indices(running[: m + 1, m], b)) for m in range(running.shape[0])
    )
    return SelectionTrace(steps)


class TheoremReport(BaseModel):
    trials: int
    violations_topb: int
    violations_control: int
    exhaustive_cases: int
    exhaustive_violations: int

    @property
    def holds(self) -> bool:
        return self.violations_topb == 0 and self.exhaustive_violations == 0 and self.violations_control > 0


def _violates(trace: SelectionTrace, b: int) -> bool:
    return not (check_budget_condition(trace, b) and check_monotone_eviction(trace))


def exhaustive_check(
    max_len: int = 6, alphabet: Sequence[float] = (1.0, 2.0, 3.0), budgets: Sequence[int] = (1, 2, 3)
) -> tuple[int, int]:
    """(cases, violations) over every score sequence of length 1..max_len and every budget."""
    cases = violations = 0
    for n in range(1, max_len + 1):
        for values in itertools.product(alphabet, repeat=n):
            for b in budgets:
                cases += 1
                violations += _violates(topb_selection_trace(ScoreSeq.of(values), b), b)
    return cases, violations


def theorem_check(trials: int = 1000, max_n: int = 64, max_b: int = 16, seed: int = 0) -> TheoremReport:
    """Randomized and exhaustive check that top-b selection is a bounded-cache computation,
    with the suffix-dependent control expected to fail it."""
    if trials < 1:
        raise ContractViolation(f"trials must be at least 1, got {trials}")
    rng = np.random.default_rng(seed)
    violations_topb = violations_control = 0
    for _ in range(trials):
        n = int(rng.integers(1, max_n + 1))
        b = int(rng.integers(1, max_b + 1))
        violations_topb += _violates(topb_selection_trace(ScoreSeq.of(rng.normal(size=n)), b), b)
        violations_control += _violates(suffix_dependent_trace(rng.random((n, n)), b), b)
    cases, exhaustive_violations = exhaustive_check()
    report = TheoremReport(
        trials=trials,
        violations_topb=violations_topb,
        violations_control=violations_control,
        exhaustive_cases=cases,
        exhaustive_violations=exhaustive_violations,
    )
    logger.info(f"Theorem check: {report.model_dump()}")
    return report
