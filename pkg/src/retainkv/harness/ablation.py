"""Stabilizer-length ablation: task accuracy and drift from the full-cache run per ``n_s``."""

from collections.abc import Sequence

import numpy as np
from loguru import logger
from pydantic import BaseModel

from retainkv.backbone import ModelConfig, Weights, full_forward
from retainkv.eviction import EvictionConfig, PolicyKind, chunked_prefill_with_eviction, decode
from retainkv.harness.consistency import scorer_for
from retainkv.harness.parallel import run_trials
from retainkv.harness.passkey import PasskeyExample
from retainkv.retaining import HeadSet

ABLATION_COLUMNS = ("seed", "n_s", "accuracy", "hidden_error", "cis_error")


class AblationRow(BaseModel):
    seed: int
    n_s: int
    accuracy: float
    hidden_error: float
    cis_error: float

    def as_row(self) -> list[object]:
        return [self.seed, self.n_s, self.accuracy, self.hidden_error, self.cis_error]


class AblationReport(BaseModel):
    n_s_grid: list[int]
    rows: list[AblationRow]

    def summary(self) -> list[AblationRow]:
        """One row per ``n_s`` averaged over tasks, with ``seed = -1``."""
        out = []
        for n_s in self.n_s_grid:
            sel = [r for r in self.rows if r.n_s == n_s]
            out.append(
                AblationRow(
                    seed=-1,
                    n_s=n_s,
                    accuracy=float(np.mean([r.accuracy for r in sel])),
                    hidden_error=float(np.mean([r.hidden_error for r in sel])),
                    cis_error=float(np.mean([r.cis_error for r in sel])),
                )
            )
        return out

    def for_seed(self, seed: int) -> dict[int, AblationRow]:
        return {r.n_s: r for r in self.rows if r.seed == seed}


def _ablate_task(
    weights: Weights,
    cfg: ModelConfig,
    headset: HeadSet,
    task: PasskeyExample,
    ev: EvictionConfig,
    n_s_grid: Sequence[int],
) -> list[AblationRow]:
    prompt = task.example.prompt_tokens
    reference = full_forward(weights, cfg, prompt, keep_attention=False, keep_logits=False)
    full_hidden = [h[-1] for h in reference.hidden]
    full_scores = scorer_for(PolicyKind.LOCRET, weights, cfg, headset)(prompt)
    rows = []
    for n_s in n_s_grid:
        run_cfg = EvictionConfig.model_validate({**ev.model_dump(), "n_s": n_s, "policy": PolicyKind.LOCRET})
        result = chunked_prefill_with_eviction(weights, cfg, prompt, run_cfg, headset)
        hidden_error = max(
            float(np.abs(np.asarray(h, dtype=np.float64) - f).max()) for h, f in zip(result.layer_hidden, full_hidden, strict=True)
        )
        diffs = [
            np.abs(cache.scores - full_scores[layer, j, cache.positions])
            for layer, j, cache in result.pool.iter_heads()
        ]
        cis_error = float(np.concatenate(diffs).mean())
        generated = decode(weights, cfg, result, len(task.answer))
        rows.append(
            AblationRow(
                seed=task.seed,
                n_s=n_s,
                accuracy=float(generated == task.answer),
                hidden_error=hidden_error,
                cis_error=cis_error,
            )
        )
        logger.debug(f"Ablation seed={task.seed} n_s={n_s} hidden={hidden_error:.3e} cis={cis_error:.3e}")
    return rows


def stabilizer_ablation(
    weights: Weights,
    cfg: ModelConfig,
    headset: HeadSet,
    tasks: Sequence[PasskeyExample],
    ev: EvictionConfig,
    n_s_grid: Sequence[int],
    jobs: int = 1,
) -> AblationReport:
    """Rerun the retaining-head pipeline at every stabilizer length in ``n_s_grid``.

    Hidden error is the largest absolute deviation of any layer's last-position hidden
    state from the full-cache forward; CIS error is the mean absolute deviation of the
    retained units' stored scores from scores computed over the full prompt.

    Raises:
        ConfigError: If a grid value exceeds the budget.
    """
    by_seed = {task.seed: task for task in tasks}
    per_task = run_trials(
        lambda seed: _ablate_task(weights, cfg, headset, by_seed[seed], ev, n_s_grid),
        [task.seed for task in tasks],
        jobs,
    )
    return AblationReport(n_s_grid=list(n_s_grid), rows=[row for rows in per_task for row in rows])
