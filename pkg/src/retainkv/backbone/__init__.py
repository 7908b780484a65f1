from retainkv.backbone.backbone_models import (
    ChunkActivations,
    FullForwardResult,
    LayerWeights,
    ModelConfig,
    RetainedKV,
    Weights,
)
from retainkv.backbone.forward import (
    FullCache,
    forward_chunk,
    full_forward,
    greedy_generate,
    token_entropy,
)
from retainkv.backbone.init_weights import (
    RetrievalLayout,
    build_matched_filter,
    init_random,
    load_weights,
    matched_filter_config,
    replicate_kv_heads,
    save_weights,
    weights_hash,
)

__all__ = [
    "ChunkActivations",
    "FullCache",
    "FullForwardResult",
    "LayerWeights",
    "ModelConfig",
    "RetainedKV",
    "RetrievalLayout",
    "Weights",
    "build_matched_filter",
    "forward_chunk",
    "full_forward",
    "greedy_generate",
    "init_random",
    "load_weights",
    "matched_filter_config",
    "replicate_kv_heads",
    "save_weights",
    "token_entropy",
    "weights_hash",
]
