"""Retaining heads, their training configuration and training examples."""

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Literal, TypeAlias

import numpy as np
import numpy.typing as npt
from pydantic import BaseModel, ConfigDict, Field, model_validator

from retainkv.backbone import ModelConfig
from retainkv.backbone.tensor_file import load_tensors, save_tensors
from retainkv.exceptions import ConfigError, ContractViolation, DataError, ShapeError
from retainkv.numerics import dtype

# (layer, kv_head, prompt position) -> causal importance score.
ScoreTensor: TypeAlias = npt.NDArray[np.floating]


class TrainingConfig(BaseModel):
    """Retaining-head training hyper-parameters. Defaults are the full-scale recipe except
    ``seq_cap`` and ``d_retain``, which are scaled to desk-size runs."""

    model_config = ConfigDict(extra="forbid")

    lr: float = Field(5e-4, gt=0.0, description="Peak learning rate.")
    total_steps: int = Field(3000, ge=0, description="Optimizer steps.")
    warmup_steps: int = Field(2000, ge=0, description="Linear warmup length.")
    alpha: float = Field(2.5e-3, ge=0.0, description="Weight of the adjacent-score smoothness term.")
    seq_cap: int = Field(1024, ge=2, description="Maximum prompt+answer length per example.")
    label_scaling: bool = Field(False, description="Divide labels by sqrt(d_head).")
    lq: int = Field(0, ge=0, description="Query tokens prepended for query-aware training; 0 disables.")
    d_retain: int = Field(1024, ge=1, description="Hidden width of each retaining head.")
    loss_reduction: Literal["sum", "mean"] = Field("sum", description="'mean' divides the loss by the prompt length.")
    betas: tuple[float, float] = Field((0.9, 0.999), description="AdamW moment decay rates.")
    eps: float = Field(1e-8, gt=0.0, description="AdamW denominator epsilon.")
    weight_decay: float = Field(0.01, ge=0.0, description="Decoupled weight decay.")
    log_every: int = Field(50, ge=1, description="Steps between progress log lines.")

    @model_validator(mode="after")
    def _check_schedule(self) -> "TrainingConfig":
        if self.warmup_steps > self.total_steps:
            raise ConfigError(f"warmup_steps={self.warmup_steps} exceeds total_steps={self.total_steps}")
        return self


class TrainingExample(BaseModel):
    """Prompt/answer token ids. ``query_len`` marks the trailing prompt tokens that form the
    question; ``None`` means the whole prompt."""

    model_config = ConfigDict(extra="forbid", populate_by_name=True)

    prompt_tokens: list[int] = Field(..., alias="prompt")
    answer_tokens: list[int] = Field(..., alias="answer")
    query_len: int | None = Field(None, ge=1)

    @model_validator(mode="after")
    def _check_lengths(self) -> "TrainingExample":
        if not self.prompt_tokens or not self.answer_tokens:
            raise ContractViolation("training examples need a non-empty prompt and answer")
        if self.query_len is not None and self.query_len > len(self.prompt_tokens):
            raise ContractViolation(f"query_len={self.query_len} exceeds prompt length {len(self.prompt_tokens)}")
        return self

    @property
    def n_q(self) -> int:
        return len(self.prompt_tokens)

    @property
    def n_a(self) -> int:
        return len(self.answer_tokens)

    @property
    def tokens(self) -> list[int]:
        return self.prompt_tokens + self.answer_tokens


def head_input_width(cfg: ModelConfig) -> int:
    """Width of a token's concatenated [Q, K, V] at one layer."""
    return cfg.n_heads * cfg.d_head + 2 * cfg.n_kv_heads * cfg.d_kv


@dataclass(frozen=True)
class RetainingHead:
    """``S = silu([Q, K, V] @ w1) @ w2``, one score per KV head."""

    w1: np.ndarray  # (h*d_head + 2*(h/g)*d_kv, d_retain)
    w2: np.ndarray  # (d_retain, h/g)

    def __post_init__(self) -> None:
        if self.w1.ndim != 2 or self.w2.ndim != 2 or self.w1.shape[1] != self.w2.shape[0]:
            raise ShapeError(f"retaining head shapes disagree: W1 {self.w1.shape}, W2 {self.w2.shape}")
        if not (np.isfinite(self.w1).all() and np.isfinite(self.w2).all()):
            raise ContractViolation("retaining head weights must be finite")

    @property
    def d_retain(self) -> int:
        return int(self.w1.shape[1])


@dataclass(frozen=True)
class HeadSet:
    """One retaining head per backbone layer."""

    heads: tuple[RetainingHead, ...]

    def __len__(self) -> int:
        return len(self.heads)

    def __getitem__(self, layer: int) -> RetainingHead:
        return self.heads[layer]

    def check(self, cfg: ModelConfig) -> "HeadSet":
        if len(self.heads) != cfg.n_layers:
            raise ShapeError(f"{len(self.heads)} retaining heads for {cfg.n_layers} layers")
        width = head_input_width(cfg)
        for i, head in enumerate(self.heads):
            if head.w1.shape[0] != width or head.w2.shape[1] != cfg.n_kv_heads:
                raise ShapeError(
                    f"layer {i} head W1 {head.w1.shape} / W2 {head.w2.shape} does not fit input width {width} and {cfg.n_kv_heads} KV heads"
                )
        return self

    def tensors(self) -> dict[str, np.ndarray]:
        out = {}
        for i, head in enumerate(self.heads):
            out[f"layer{i}.W1"] = head.w1
            out[f"layer{i}.W2"] = head.w2
        return out

    @classmethod
    def from_tensors(cls, tensors: dict[str, np.ndarray]) -> "HeadSet":
        n_layers = len(tensors) // 2
        try:
            heads = tuple(RetainingHead(tensors[f"layer{i}.W1"], tensors[f"layer{i}.W2"]) for i in range(n_layers))
        except KeyError as e:
            raise DataError(f"headset container is missing {e.args[0]}") from e
        if 2 * n_layers != len(tensors):
            raise DataError("headset container holds unexpected tensors")
        return cls(heads)


def init_headset(cfg: ModelConfig, d_retain: int, seed: int) -> HeadSet:
    """W1 ~ N(0, 1/fan_in), W2 ~ N(0, 1/d_retain), seeded."""
    rng = np.random.default_rng(seed)
    width = head_input_width(cfg)
    dt = dtype()
    heads = tuple(
        RetainingHead(
            w1=rng.normal(0.0, width**-0.5, size=(width, d_retain)).astype(dt),
            w2=rng.normal(0.0, d_retain**-0.5, size=(d_retain, cfg.n_kv_heads)).astype(dt),
        )
        for _ in range(cfg.n_layers)
    )
    return HeadSet(heads)


def save_headset(path: str | Path, headset: HeadSet, cfg: ModelConfig) -> Path:
    return save_tensors(path, headset.tensors(), {"kind": "headset", "config": cfg.model_dump_json()})


def load_headset(path: str | Path, cfg: ModelConfig | None = None) -> HeadSet:
    tensors, metadata = load_tensors(path)
    if metadata.get("kind") != "headset":
        raise DataError(f"{path} does not contain retaining heads")
    headset = HeadSet.from_tensors(tensors)
    if cfg is None and "config" in metadata:
        cfg = ModelConfig.model_validate(json.loads(metadata["config"]))
    return headset.check(cfg) if cfg is not None else headset
