"""Eviction configuration."""

from enum import Enum

from pydantic import BaseModel, ConfigDict, Field, model_validator

from retainkv.exceptions import ConfigError


class PolicyKind(str, Enum):
    LOCRET = "locret"
    LOCRET_Q = "locret_q"
    RANDOM = "random"
    SINK_RECENT = "sink_recent"
    H2O_SUM = "h2o_sum"
    SNAPKV_WINDOW = "snapkv_window"
    SIRLLM_ENTROPY = "sirllm_entropy"


class StabilizerMode(str, Enum):
    """``transient`` protects the newest ``n_s`` units for one step only; ``persistent``
    keeps every unit that was ever a stabilizer pinned, as a destructive ``+inf``
    overwrite of the score cache would."""

    TRANSIENT = "transient"
    PERSISTENT = "persistent"


class EvictionConfig(BaseModel):
    """Budget and chunking of one prefill. ``b`` is per (layer, KV head)."""

    model_config = ConfigDict(extra="forbid")

    b: int = Field(6000, ge=1, description="Retained units per (layer, KV head).")
    B: int = Field(3072, ge=1, description="Chunk size of chunked prefill.")
    n_s: int = Field(2500, ge=0, description="Stabilizer length.")
    n_loc: int = Field(100, ge=0, description="Trailing prompt tokens appended without eviction.")
    policy: PolicyKind = Field(PolicyKind.LOCRET, description="Scoring policy.")
    stabilizer_mode: StabilizerMode = Field(StabilizerMode.TRANSIENT, description="Stabilizer masking mode.")
    sink_len: int = Field(4, ge=0, description="Attention-sink length for sink_recent.")
    recent_len: int = Field(1000, ge=0, description="Recent window for sink_recent; its cache is capped at sink_len + recent_len.")
    window: int = Field(100, ge=1, description="Observation window for snapkv_window.")
    seed: int = Field(0, description="Seed of the random policy.")

    @model_validator(mode="after")
    def _check_budget(self) -> "EvictionConfig":
        if self.b < self.n_s:
            raise ConfigError(f"budget b={self.b} is smaller than the stabilizer length n_s={self.n_s}")
        return self
