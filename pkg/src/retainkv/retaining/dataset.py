"""JSONL datasets of training examples and the example transforms applied before training."""

import json
from collections.abc import Iterable
from pathlib import Path

from loguru import logger
from pydantic import ValidationError

from retainkv.exceptions import ContractViolation, DataError, RetainKVError
from retainkv.retaining.retaining_models import TrainingExample


def load_dataset(path: str | Path) -> list[TrainingExample]:
    """Read one ``{"prompt": [...], "answer": [...]}`` object per line. Blank lines are skipped.

    Raises:
        DataError: On a missing file or a malformed line (the line number is reported).
    """
    path = Path(path)
    if not path.exists():
        raise DataError(f"dataset {path} does not exist")
    examples = []
    with path.open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                examples.append(TrainingExample.model_validate(json.loads(line)))
            except (json.JSONDecodeError, ValidationError, RetainKVError) as e:
                raise DataError(f"{path}:{lineno}: {e}") from e
    logger.info(f"Loaded {len(examples)} examples from {path}")
    return examples


def save_dataset(path: str | Path, examples: Iterable[TrainingExample]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [ex.model_dump_json(by_alias=True, exclude_none=True) for ex in examples]
    path.write_text("".join(f"{line}\n" for line in lines), encoding="utf-8")
    logger.info(f"Wrote {len(lines)} examples to {path}")
    return path


def truncate_example(example: TrainingExample, seq_cap: int) -> TrainingExample:
    """Drop prompt tokens until prompt+answer fits ``seq_cap``; the answer is never cut
    and at least one prompt token survives.

    Without ``query_len`` the prompt keeps its head. Otherwise the context loses its tail
    and the trailing question is kept, whole if it fits.
    """
    keep = max(1, seq_cap - example.n_a)
    if example.n_q <= keep:
        return example
    if example.query_len is None:
        return TrainingExample(prompt=example.prompt_tokens[:keep], answer=example.answer_tokens)
    query_len = min(example.query_len, keep)
    prompt = example.prompt_tokens[: keep - query_len] + example.prompt_tokens[example.n_q - query_len :]
    return TrainingExample(prompt=prompt, answer=example.answer_tokens, query_len=query_len)


def make_locretq_example(example: TrainingExample, lq: int) -> TrainingExample:
    """Prepend the last ``min(lq, query length)`` query tokens to the prompt."""
    if lq < 0:
        raise ContractViolation(f"lq must be non-negative, got {lq}")
    query_len = example.query_len or example.n_q
    take = min(lq, query_len)
    if take == 0:
        return example
    prefix = example.prompt_tokens[example.n_q - take :]
    return TrainingExample(
        prompt=prefix + example.prompt_tokens,
        answer=example.answer_tokens,
        query_len=example.query_len,
    )
