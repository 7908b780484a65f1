"""Weight construction: seeded random init, the matched-filter retrieval model, persistence."""

import json
from pathlib import Path
from typing import Protocol

import numpy as np
from loguru import logger

from retainkv.backbone.backbone_models import LayerWeights, ModelConfig, Weights, layer_shapes
from retainkv.backbone.tensor_file import load_tensors, save_tensors, tensors_hash
from retainkv.exceptions import ConfigError, DataError
from retainkv.numerics import dtype

# Rotary base of the matched-filter model: only the first rotary pair turns.
MATCHED_FILTER_THETA = 1e300
# First head dimension carrying a token code; dims 0-1 form the rotating pair.
_CODE_OFFSET = 2


class RetrievalLayout(Protocol):
    """Token layout of a retrieval task: a marker followed by slot-ordered answer digits."""

    marker_id: int
    n_slots: int

    def slot_tokens(self, slot: int) -> list[int]: ...


def init_random(cfg: ModelConfig, seed: int) -> Weights:
    """Normal init with std ``d_model ** -0.5`` and unit norm gains. Same seed, same weights."""
    rng = np.random.default_rng(seed)
    std = cfg.d_model**-0.5
    dt = dtype()

    def draw(shape: tuple[int, ...]) -> np.ndarray:
        return rng.normal(0.0, std, size=shape).astype(dt)

    tensors: dict[str, np.ndarray] = {
        "embedding": draw((cfg.vocab_size, cfg.d_model)),
        "unembedding": draw((cfg.d_model, cfg.vocab_size)),
        "final_norm": np.ones(cfg.d_model, dtype=dt),
    }
    for i in range(cfg.n_layers):
        for name, shape in layer_shapes(cfg).items():
            tensors[f"layer{i}.{name}"] = np.ones(shape, dtype=dt) if name.endswith("_norm") else draw(shape)
    logger.debug(f"Initialised random backbone seed={seed} layers={cfg.n_layers}")
    return Weights.from_tensors(cfg, tensors)


def matched_filter_config(
    vocab_size: int,
    *,
    n_layers: int = 2,
    d_head: int = 48,
    n_heads: int = 2,
    d_ff: int = 64,
    max_positions: int = 1 << 20,
) -> ModelConfig:
    """A config usable by :func:`build_matched_filter`: one KV head shared by all query heads."""
    return ModelConfig(
        n_layers=n_layers,
        n_heads=n_heads,
        group_size=n_heads,
        d_model=n_heads * d_head,
        d_head=d_head,
        d_kv=d_head,
        d_ff=d_ff,
        vocab_size=vocab_size,
        rope_theta=MATCHED_FILTER_THETA,
        max_positions=max_positions,
    )


def build_matched_filter(
    cfg: ModelConfig,
    match_gain: float = 12.0,
    layout: RetrievalLayout | None = None,
    seed: int = 0,
) -> Weights:
    """Hand-built backbone whose first layer matches tokens by identity.

    Embeddings are one-hot token codes. In layer 0, query head 0 and KV head 0 both map
    token ``t`` to ``match_gain * c_t``, so the unscaled pre-softmax score between two
    positions is ``match_gain**2`` when their tokens agree and about 0 otherwise.

    With a ``layout``, query head 1 (same KV group) retrieves the next answer digit: the
    marker queries slot-0 digits, a slot-``s`` digit queries slot-``s+1`` digits. Its
    output is written into a residual subspace that the unembedding reads, so greedy
    decoding after the marker spells out the stored digits for as long as their cache
    units are present.

    Every other layer is random (seeded) with zero output projections, leaving the
    residual stream untouched.

    Raises:
        ConfigError: If the vocabulary does not fit the head width, the rotary base
            turns code dimensions, or a layout is given without a second query head in
            KV group 0.
    """
    vocab = cfg.vocab_size
    if vocab > cfg.d_head - _CODE_OFFSET:
        raise ConfigError(f"matched filter needs vocab_size <= d_head - {_CODE_OFFSET}, got {vocab} > {cfg.d_head - _CODE_OFFSET}")
    slowest_turn = cfg.max_positions * cfg.rope_theta ** (-_CODE_OFFSET / cfg.d_head)
    if slowest_turn > 1e-3:
        raise ConfigError(f"rope_theta={cfg.rope_theta:g} rotates code dimensions; use matched_filter_config()")
    if layout is not None and cfg.group_size < 2:
        raise ConfigError("retrieval layout needs two query heads sharing KV head 0")

    base = init_random(cfg, seed)
    tensors = {name: np.array(arr) for name, arr in base.tensors().items()}
    dt = dtype()
    gain = float(match_gain)
    codes = _CODE_OFFSET + np.arange(vocab)

    embedding = np.zeros((vocab, cfg.d_model), dtype=dt)
    embedding[np.arange(vocab), np.arange(vocab)] = 1.0
    tensors["embedding"] = embedding

    wq = np.zeros_like(tensors["layer0.wq"])
    wk = tensors["layer0.wk"]
    wv = tensors["layer0.wv"]
    wk[0] = 0.0
    wv[0] = 0.0
    wq[0, np.arange(vocab), codes] = gain
    wk[0, np.arange(vocab), codes] = gain
    wv[0, np.arange(vocab), codes] = 1.0
    wo = np.zeros_like(tensors["layer0.wo"])
    unembedding = np.zeros_like(tensors["unembedding"])
    if layout is None:
        unembedding[np.arange(vocab), np.arange(vocab)] = 1.0
    else:
        wq[1, layout.marker_id, _CODE_OFFSET + np.asarray(layout.slot_tokens(0))] = gain
        for slot in range(layout.n_slots - 1):
            following = _CODE_OFFSET + np.asarray(layout.slot_tokens(slot + 1))
            for token in layout.slot_tokens(slot):
                wq[1, token, following] = gain
        wo[cfg.d_head + codes, vocab + np.arange(vocab)] = 1.0
        unembedding[vocab + np.arange(vocab), np.arange(vocab)] = 1.0
    tensors["layer0.wq"] = wq
    tensors["layer0.wo"] = wo
    tensors["layer0.attn_norm"] = np.full(cfg.d_model, cfg.d_model**-0.5, dtype=dt)
    tensors["unembedding"] = unembedding
    for i in range(cfg.n_layers):
        tensors[f"layer{i}.w_down"][:] = 0.0
        if i:
            tensors[f"layer{i}.wo"][:] = 0.0
    logger.debug(f"Built matched-filter backbone gain={gain} retrieval={'on' if layout else 'off'}")
    return Weights.from_tensors(cfg, tensors)


def replicate_kv_heads(weights: Weights, cfg: ModelConfig) -> tuple[Weights, ModelConfig]:
    """Rewrite a grouped-query model as multi-head attention by copying each KV head ``g`` times."""
    mha = cfg.model_copy(update={"group_size": 1})
    tensors = dict(weights.tensors())
    for i in range(cfg.n_layers):
        for name in ("wk", "wv"):
            tensors[f"layer{i}.{name}"] = np.repeat(tensors[f"layer{i}.{name}"], cfg.group_size, axis=0)
    return Weights.from_tensors(mha, tensors), mha


def weights_hash(weights: Weights) -> str:
    return tensors_hash(weights.tensors())


def save_weights(path: str | Path, weights: Weights, cfg: ModelConfig) -> Path:
    return save_tensors(path, weights.tensors(), {"kind": "weights", "config": cfg.model_dump_json()})


def load_weights(path: str | Path) -> tuple[Weights, ModelConfig]:
    """Load weights and the config stored next to them.

    Raises:
        DataError: If the container does not hold backbone weights.
        ShapeError: If a tensor disagrees with the stored config.
    """
    tensors, metadata = load_tensors(path)
    if metadata.get("kind") != "weights" or "config" not in metadata:
        raise DataError(f"{path} does not contain backbone weights")
    try:
        cfg = ModelConfig.model_validate(json.loads(metadata["config"]))
    except json.JSONDecodeError as e:
        raise DataError(f"bad config metadata in {path}") from e
    return Weights.from_tensors(cfg, tensors), cfg
