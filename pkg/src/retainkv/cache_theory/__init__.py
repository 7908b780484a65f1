from retainkv.cache_theory.cache_problem import (
    ScoreSeq,
    SelectionTrace,
    TheoremReport,
    check_budget_condition,
    check_monotone_eviction,
    exhaustive_check,
    suffix_dependent_trace,
    theorem_check,
    topb_selection_trace,
)

__all__ = [
    "ScoreSeq",
    "SelectionTrace",
    "TheoremReport",
    "check_budget_condition",
    "check_monotone_eviction",
    "exhaustive_check",
    "suffix_dependent_trace",
    "theorem_check",
    "topb_selection_trace",
]
