"""Backbone configuration, parameter store and per-chunk activations."""

from dataclasses import dataclass, field
from typing import Protocol

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from retainkv.exceptions import ConfigError, ShapeError
from retainkv.numerics import Mat, dtype


class ModelConfig(BaseModel):
    """Shape of the toy decoder-only backbone.

    ``group_size`` query heads share one KV head; ``group_size == 1`` is multi-head
    attention. Invalid combinations raise :class:`ConfigError`.
    """

    model_config = ConfigDict(extra="forbid", frozen=True)

    n_layers: int = Field(2, ge=1, description="Transformer blocks (L).")
    n_heads: int = Field(4, ge=1, description="Query heads per layer (h).")
    group_size: int = Field(2, ge=1, description="Query heads per KV head (g).")
    d_model: int = Field(64, ge=1, description="Residual stream width.")
    d_head: int = Field(16, ge=2, description="Per-head query width (d_m).")
    d_kv: int = Field(16, ge=2, description="Per-head key/value width.")
    d_ff: int = Field(128, ge=1, description="Gated feed-forward width.")
    vocab_size: int = Field(64, ge=2, description="Token ids are 0..vocab_size-1.")
    rope_theta: float = Field(10000.0, gt=1.0, description="Rotary base.")
    norm_eps: float = Field(1e-6, gt=0.0, description="RMSNorm epsilon.")
    max_positions: int = Field(1 << 20, ge=1, description="Exclusive bound on virtual positions.")

    @model_validator(mode="after")
    def _check_shapes(self) -> "ModelConfig":
        if self.n_heads % self.group_size:
            raise ConfigError(f"n_heads={self.n_heads} is not divisible by group_size={self.group_size}")
        if self.d_model != self.n_heads * self.d_head:
            raise ConfigError(f"d_model={self.d_model} must equal n_heads*d_head={self.n_heads * self.d_head}")
        if self.d_kv != self.d_head:
            raise ConfigError("attention scores need d_kv == d_head")
        if self.d_head % 2:
            raise ConfigError(f"rotary embedding needs an even d_head, got {self.d_head}")
        return self

    @property
    def n_kv_heads(self) -> int:
        return self.n_heads // self.group_size

    def group(self, kv_head: int) -> range:
        """Query heads reading KV head ``kv_head``."""
        return range(kv_head * self.group_size, (kv_head + 1) * self.group_size)


LAYER_TENSORS = ("wq", "wk", "wv", "wo", "w_gate", "w_up", "w_down", "attn_norm", "ffn_norm")


@dataclass(frozen=True)
class LayerWeights:
    wq: np.ndarray  # (h, d_model, d_head)
    wk: np.ndarray  # (h/g, d_model, d_kv)
    wv: np.ndarray  # (h/g, d_model, d_kv)
    wo: np.ndarray  # (h*d_head, d_model)
    w_gate: np.ndarray  # (d_model, d_ff)
    w_up: np.ndarray  # (d_model, d_ff)
    w_down: np.ndarray  # (d_ff, d_model)
    attn_norm: np.ndarray  # (d_model,)
    ffn_norm: np.ndarray  # (d_model,)


def layer_shapes(cfg: ModelConfig) -> dict[str, tuple[int, ...]]:
    return {
        "wq": (cfg.n_heads, cfg.d_model, cfg.d_head),
        "wk": (cfg.n_kv_heads, cfg.d_model, cfg.d_kv),
        "wv": (cfg.n_kv_heads, cfg.d_model, cfg.d_kv),
        "wo": (cfg.n_heads * cfg.d_head, cfg.d_model),
        "w_gate": (cfg.d_model, cfg.d_ff),
        "w_up": (cfg.d_model, cfg.d_ff),
        "w_down": (cfg.d_ff, cfg.d_model),
        "attn_norm": (cfg.d_model,),
        "ffn_norm": (cfg.d_model,),
    }


def _frozen(arr: np.ndarray) -> np.ndarray:
    out = np.array(arr, dtype=dtype(), copy=True)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class Weights:
    """Read-only parameter store. Arrays are copied and locked on construction."""

    layers: tuple[LayerWeights, ...]
    embedding: np.ndarray  # (vocab, d_model)
    unembedding: np.ndarray  # (d_model, vocab)
    final_norm: np.ndarray  # (d_model,)

    def tensors(self) -> dict[str, np.ndarray]:
        out = {"embedding": self.embedding, "unembedding": self.unembedding, "final_norm": self.final_norm}
        for i, layer in enumerate(self.layers):
            for name in LAYER_TENSORS:
                out[f"layer{i}.{name}"] = getattr(layer, name)
        return out

    @classmethod
    def from_tensors(cls, cfg: ModelConfig, tensors: dict[str, np.ndarray]) -> "Weights":
        """Build weights from named arrays, checking every shape against ``cfg``."""
        expected = {
            "embedding": (cfg.vocab_size, cfg.d_model),
            "unembedding": (cfg.d_model, cfg.vocab_size),
            "final_norm": (cfg.d_model,),
        }
        for i in range(cfg.n_layers):
            for name, shape in layer_shapes(cfg).items():
                expected[f"layer{i}.{name}"] = shape
        missing = sorted(set(expected) - set(tensors))
        extra = sorted(set(tensors) - set(expected))
        if missing or extra:
            raise ShapeError(f"weight tensors do not match the config: missing={missing} unexpected={extra}")
        for name, shape in expected.items():
            if tuple(tensors[name].shape) != shape:
                raise ShapeError(f"{name} has shape {tuple(tensors[name].shape)}, expected {shape}")
        layers = tuple(
            LayerWeights(**{name: _frozen(tensors[f"layer{i}.{name}"]) for name in LAYER_TENSORS})
            for i in range(cfg.n_layers)
        )
        return cls(
            layers=layers,
            embedding=_frozen(tensors["embedding"]),
            unembedding=_frozen(tensors["unembedding"]),
            final_norm=_frozen(tensors["final_norm"]),
        )


class RetainedKV(Protocol):
    """Read access to per-(layer, KV head) pre-RoPE keys and values in position order."""

    def kv(self, layer: int, kv_head: int) -> tuple[np.ndarray, np.ndarray]: ...


@dataclass
class ChunkActivations:
    """Everything one forward pass over a chunk exposes to scorers and the pipeline.

    ``q`` holds pre-RoPE queries, ``k_pre`` pre-RoPE keys; heads are concatenated along
    the column axis in head order. ``attention[l][i]`` is query head ``i``'s softmax over
    ``[retained cache || chunk]`` and is only filled when requested.
    """

    tokens: np.ndarray
    q: list[Mat]
    k_pre: list[Mat]
    v: list[Mat]
    hidden: list[Mat]
    logits: Mat
    attention: list[list[Mat]] = field(default_factory=list)
    cache_lengths: list[list[int]] = field(default_factory=list)

    @property
    def n_tokens(self) -> int:
        return int(self.tokens.shape[0])

    @property
    def last_hidden(self) -> Mat:
        return self.hidden[-1]

    def k_head(self, layer: int, kv_head: int, d_kv: int) -> Mat:
        return self.k_pre[layer][:, kv_head * d_kv : (kv_head + 1) * d_kv]

    def v_head(self, layer: int, kv_head: int, d_kv: int) -> Mat:
        return self.v[layer][:, kv_head * d_kv : (kv_head + 1) * d_kv]


@dataclass
class FullForwardResult(ChunkActivations):
    """A single-pass forward. ``qk_logits[l]`` is (h, n, n) unscaled post-RoPE Q.K^T."""

    qk_logits: list[np.ndarray] = field(default_factory=list)
