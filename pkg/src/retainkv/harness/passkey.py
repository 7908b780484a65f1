"""Synthetic passkey retrieval: a digit needle hidden in filler, recalled after a marker."""

from dataclasses import dataclass
from typing import Literal

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from retainkv.exceptions import ConfigError
from retainkv.retaining import TrainingExample


@dataclass(frozen=True)
class PasskeyVocab:
    """Token layout: filler ``0..n_filler-1``, then the marker, then slot-major digits.

    Digit ``v`` of slot ``s`` is ``n_filler + 1 + s * digits_per_slot + v``, so every needle
    position draws from its own sub-vocabulary and no needle token is ever filler.
    """

    n_filler: int
    n_slots: int
    digits_per_slot: int

    @property
    def marker_id(self) -> int:
        return self.n_filler

    @property
    def vocab_size(self) -> int:
        return self.n_filler + 1 + self.n_slots * self.digits_per_slot

    def digit(self, slot: int, value: int) -> int:
        return self.n_filler + 1 + slot * self.digits_per_slot + value

    def slot_tokens(self, slot: int) -> list[int]:
        return [self.digit(slot, v) for v in range(self.digits_per_slot)]

    def is_needle(self, token: int) -> bool:
        return token > self.marker_id


class PasskeyTaskConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    haystack_len: int = Field(1024, ge=3, description="Prompt length including needle and marker.")
    needle_len: int = Field(4, ge=1, description="Digits in the needle.")
    digits_per_slot: int = Field(5, ge=2, description="Values each needle digit can take.")
    n_filler: int = Field(16, ge=1, description="Distinct filler tokens.")
    needle_position: int | Literal["uniform-random"] = Field("uniform-random", description="Needle start.")
    seed: int = Field(0, description="Base seed; example i uses seed + i.")
    n_examples: int = Field(64, ge=1, description="Examples written by gen-data.")

    @model_validator(mode="after")
    def _check_fit(self) -> "PasskeyTaskConfig":
        if self.needle_len >= self.haystack_len - 1:
            raise ConfigError(f"needle_len={self.needle_len} does not fit a haystack of {self.haystack_len} tokens")
        if isinstance(self.needle_position, int) and not 0 <= self.needle_position <= self.max_start:
            raise ConfigError(f"needle_position={self.needle_position} outside [0, {self.max_start}]")
        return self

    @property
    def max_start(self) -> int:
        return self.haystack_len - 1 - self.needle_len

    @property
    def vocab(self) -> PasskeyVocab:
        return PasskeyVocab(self.n_filler, self.needle_len, self.digits_per_slot)


@dataclass(frozen=True)
class PasskeyExample:
    example: TrainingExample
    needle_positions: list[int]
    answer: list[int]
    seed: int


def gen_passkey(cfg: PasskeyTaskConfig, seed: int | None = None) -> PasskeyExample:
    """``filler || needle || filler || marker``; the answer is the needle. Same seed, same example."""
    seed = cfg.seed if seed is None else seed
    rng = np.random.default_rng(seed)
    vocab = cfg.vocab
    if cfg.needle_position == "uniform-random":
        start = int(rng.integers(0, cfg.max_start + 1))
    else:
        start = cfg.needle_position
    needle = [vocab.digit(s, int(v)) for s, v in enumerate(rng.integers(0, cfg.digits_per_slot, cfg.needle_len))]
    filler = rng.integers(0, cfg.n_filler, cfg.haystack_len - 1 - cfg.needle_len).tolist()
    prompt = filler[:start] + needle + filler[start:] + [vocab.marker_id]
    example = TrainingExample(prompt=prompt, answer=needle, query_len=1)
    return PasskeyExample(example, list(range(start, start + cfg.needle_len)), needle, seed)


def gen_passkey_set(cfg: PasskeyTaskConfig, n: int | None = None) -> list[PasskeyExample]:
    return [gen_passkey(cfg, cfg.seed + i) for i in range(cfg.n_examples if n is None else n)]
