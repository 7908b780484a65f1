"""Passkey accuracy of eviction policies across budgets and chunk sizes."""

from collections.abc import Sequence

from loguru import logger
from pydantic import BaseModel

from retainkv.backbone import ModelConfig, Weights, greedy_generate
from retainkv.eviction import EvictionConfig, PolicyKind, decode, prefill_prompt
from retainkv.harness.compression import compression_ratio
from retainkv.harness.parallel import run_trials
from retainkv.harness.passkey import PasskeyTaskConfig, gen_passkey
from retainkv.retaining import HeadSet

FULL_ATTENTION = "full_attention"
CONTROL_HEADS = "locret_random_heads"
ACCURACY_COLUMNS = ("column", "b", "B", "compression_ratio", "accuracy", "n_trials")


class AccuracyRow(BaseModel):
    column: str
    b: int
    B: int
    compression_ratio: float
    accuracy: float
    n_trials: int

    def as_row(self) -> list[object]:
        return [self.column, self.b, self.B, self.compression_ratio, self.accuracy, self.n_trials]


class AccuracyTable(BaseModel):
    seeds: list[int]
    baseline_accuracy: float
    rows: list[AccuracyRow]

    def accuracy(self, column: str, b: int, B: int | None = None) -> float:
        for row in self.rows:
            if row.column == column and row.b == b and (B is None or row.B == B):
                return row.accuracy
        raise KeyError((column, b, B))


def _trial(
    weights: Weights,
    cfg: ModelConfig,
    task_cfg: PasskeyTaskConfig,
    seed: int,
    settings: list[tuple[str, EvictionConfig, HeadSet | None]],
) -> tuple[bool, list[bool]]:
    task = gen_passkey(task_cfg, seed)
    prompt = task.example.prompt_tokens
    baseline = greedy_generate(weights, cfg, prompt, len(task.answer)) == task.answer
    hits = []
    for _, ev, heads in settings:
        result = prefill_prompt(weights, cfg, prompt, ev, heads, query_len=task.example.query_len)
        hits.append(decode(weights, cfg, result, len(task.answer)) == task.answer)
    return baseline, hits


def passkey_eval(
    weights: Weights,
    cfg: ModelConfig,
    headset: HeadSet | None,
    ev: EvictionConfig,
    budgets: Sequence[int],
    trials: int,
    task_cfg: PasskeyTaskConfig,
    *,
    policies: Sequence[PolicyKind] | None = None,
    chunk_sizes: Sequence[int] | None = None,
    control_headset: HeadSet | None = None,
    jobs: int = 1,
) -> AccuracyTable:
    """Exact-match needle recall over ``trials`` seeded haystacks.

    Every (policy, budget, chunk size) cell runs on the same haystacks; the
    full-attention baseline and, when given, a column with ``control_headset`` in place
    of the trained heads run alongside. ``n_s`` is clipped to each budget, and for
    ``locret_q`` leaves room for the one-token question.
    """
    seeds = [task_cfg.seed + i for i in range(trials)]
    policies = list(policies or [ev.policy])
    chunk_sizes = list(chunk_sizes or [ev.B])
    settings: list[tuple[str, EvictionConfig, HeadSet | None]] = []
    for b in budgets:
        for B in chunk_sizes:
            base = {**ev.model_dump(), "b": b, "B": B, "n_s": min(ev.n_s, b)}
            for kind in policies:
                run = {**base, "policy": kind}
                if kind is PolicyKind.LOCRET_Q:
                    run["n_s"] = min(ev.n_s, b - 1)
                settings.append((kind.value, EvictionConfig.model_validate(run), headset))
            if control_headset is not None:
                settings.append((CONTROL_HEADS, EvictionConfig.model_validate({**base, "policy": PolicyKind.LOCRET}), control_headset))
    outcomes = run_trials(lambda seed: _trial(weights, cfg, task_cfg, seed, settings), seeds, jobs)
    baseline_accuracy = sum(base for base, _ in outcomes) / trials
    rows = []
    for i, (column, run_cfg, _) in enumerate(settings):
        accuracy = sum(hits[i] for _, hits in outcomes) / trials
        rows.append(
            AccuracyRow(
                column=column,
                b=run_cfg.b,
                B=run_cfg.B,
                compression_ratio=compression_ratio(task_cfg.haystack_len, run_cfg.b),
                accuracy=accuracy,
                n_trials=trials,
            )
        )
        logger.info(f"{column} b={run_cfg.b} B={run_cfg.B}: accuracy {accuracy:.3f}")
    rows.append(AccuracyRow(column=FULL_ATTENTION, b=task_cfg.haystack_len, B=task_cfg.haystack_len, compression_ratio=1.0, accuracy=baseline_accuracy, n_trials=trials))
    return AccuracyTable(seeds=seeds, baseline_accuracy=baseline_accuracy, rows=rows)
