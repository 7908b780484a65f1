"""Run configuration: one document with a section per module, plus dotted overrides.

Overrides come from the command line as ``--section.key value`` or
``--section.key=value``; values are parsed as YAML scalars, so ``128`` is an int,
``true`` a bool and ``[0, 32]`` a list.
"""

from pathlib import Path
from typing import Any, Literal

import yaml
from pydantic import BaseModel, ConfigDict, Field

from retainkv.backbone import ModelConfig
from retainkv.eviction import EvictionConfig
from retainkv.exceptions import ConfigError
from retainkv.harness import PasskeyTaskConfig
from retainkv.retaining import TrainingConfig
from retainkv.utils.yaml_tools import YAMLMixin


class InitConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    kind: Literal["random", "matched_filter"] = Field("random", description="Backbone construction.")
    match_gain: float = Field(12.0, gt=0.0, description="Identity-match gain of the matched filter.")


class IOConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    out_dir: Path = Field(Path("runs"), description="Directory for reports.")
    weights: Path | None = None
    headset: Path | None = None
    dataset: Path | None = None
    prompt: Path | None = None


class RunConfig(YAMLMixin, BaseModel):
    model_config = ConfigDict(extra="forbid", protected_namespaces=())

    model: ModelConfig = Field(default_factory=ModelConfig)
    init: InitConfig = Field(default_factory=InitConfig)
    training: TrainingConfig = Field(default_factory=TrainingConfig)
    eviction: EvictionConfig = Field(default_factory=EvictionConfig)
    task: PasskeyTaskConfig = Field(default_factory=PasskeyTaskConfig)
    io: IOConfig = Field(default_factory=IOConfig)
    seed: int = 0
    jobs: int = Field(1, ge=1, description="Parallel trials in the harness.")

    def echo(self) -> dict[str, Any]:
        return self.model_dump(mode="json")


def parse_overrides(args: list[str]) -> dict[str, Any]:
    """``["--eviction.b", "128", "--seed=3"]`` -> ``{"eviction.b": 128, "seed": 3}``."""
    out: dict[str, Any] = {}
    i = 0
    while i < len(args):
        arg = args[i]
        if not arg.startswith("--"):
            raise ConfigError(f"unexpected argument {arg!r}; overrides look like --section.key value")
        key, sep, value = arg[2:].partition("=")
        if not sep:
            if i + 1 >= len(args):
                raise ConfigError(f"override {arg} has no value")
            i += 1
            value = args[i]
        try:
            out[key] = yaml.safe_load(value)
        except yaml.YAMLError as e:
            raise ConfigError(f"override {key} has an unparseable value {value!r}") from e
        i += 1
    return out


def apply_overrides(data: dict[str, Any], overrides: dict[str, Any]) -> dict[str, Any]:
    merged = yaml.safe_load(yaml.safe_dump(data)) or {}
    for dotted, value in overrides.items():
        *parents, leaf = dotted.split(".")
        node = merged
        for part in parents:
            child = node.setdefault(part, {})
            if not isinstance(child, dict):
                raise ConfigError(f"override {dotted} descends into a non-section {part!r}")
            node = child
        node[leaf] = value
    return merged


def load_run_config(path: str | Path | None = None, args: list[str] | None = None) -> RunConfig:
    """Read ``path`` (JSON or YAML; defaults when absent) and apply dotted overrides.

    Raises:
        ConfigError: On unknown keys or values that fail validation.
        DataError: If the file cannot be read or parsed.
    """
    base: dict[str, Any] = {}
    if path is not None:
        base = RunConfig.from_file(path).model_dump(mode="json", exclude_unset=True)
    return RunConfig.from_dict(apply_overrides(base, parse_overrides(args or [])))
