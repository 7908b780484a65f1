"""Retaining-head training against a frozen backbone."""

from collections.abc import Sequence
from dataclasses import dataclass, field

import numpy as np
from loguru import logger
from pydantic import BaseModel

from retainkv.backbone import ModelConfig, Weights, full_forward, weights_hash
from retainkv.exceptions import ContractViolation, DataError
from retainkv.retaining.dataset import make_locretq_example, truncate_example
from retainkv.retaining.labels import head_inputs, labels_from_forward
from retainkv.retaining.objective import loss_and_grad
from retainkv.retaining.optim import AdamWState, adamw_step, lr_schedule
from retainkv.retaining.retaining_models import HeadSet, RetainingHead, TrainingConfig, TrainingExample


class LossPoint(BaseModel):
    step: int
    lr: float
    loss: float


@dataclass
class TrainingResult:
    headset: HeadSet
    loss_curve: list[LossPoint] = field(default_factory=list)
    backbone_hash: str = ""


def _params(headset: HeadSet) -> dict[str, np.ndarray]:
    return headset.tensors()


def _headset(params: dict[str, np.ndarray], n_layers: int) -> HeadSet:
    return HeadSet(tuple(RetainingHead(params[f"layer{i}.W1"], params[f"layer{i}.W2"]) for i in range(n_layers)))


def prepare_example(example: TrainingExample, cfg: TrainingConfig) -> TrainingExample:
    example = truncate_example(example, cfg.seq_cap)
    return make_locretq_example(example, cfg.lq) if cfg.lq else example


def train(
    headset: HeadSet,
    weights: Weights,
    model_cfg: ModelConfig,
    dataset: Sequence[TrainingExample],
    cfg: TrainingConfig,
    seed: int,
) -> TrainingResult:
    """Fit every layer's retaining head with batch size 1.

    Each step samples one example (seeded), runs one full forward pass for both labels and
    head inputs, and applies AdamW to all heads. The backbone is only read; its hash is
    compared before and after.

    Raises:
        DataError: If ``dataset`` is empty.
        ContractViolation: If the backbone changed during training.
    """
    if not dataset:
        raise DataError("cannot train on an empty dataset")
    headset.check(model_cfg)
    before = weights_hash(weights)
    rng = np.random.default_rng(seed)
    params = _params(headset)
    state = AdamWState.zeros_like(params)
    curve: list[LossPoint] = []
    logger.info(f"Training {model_cfg.n_layers} retaining heads for {cfg.total_steps} steps on {len(dataset)} examples")
    for step in range(cfg.total_steps):
        example = prepare_example(dataset[int(rng.integers(len(dataset)))], cfg)
        fwd = full_forward(weights, model_cfg, example.tokens, keep_attention=False, keep_logits=True)
        labels = labels_from_forward(fwd, model_cfg, example.n_q, cfg.label_scaling)
        current = _headset(params, model_cfg.n_layers)
        total = 0.0
        grads: dict[str, np.ndarray] = {}
        for layer in range(model_cfg.n_layers):
            x = head_inputs(fwd, layer, slice(0, example.n_q))
            value, d_w1, d_w2 = loss_and_grad(current[layer], x, labels[layer], cfg.alpha, cfg.loss_reduction)
            total += value
            grads[f"layer{layer}.W1"] = d_w1
            grads[f"layer{layer}.W2"] = d_w2
        lr_t = lr_schedule(step, cfg)
        params, state = adamw_step(params, grads, state, lr_t, cfg.betas, cfg.eps, cfg.weight_decay)
        curve.append(LossPoint(step=step, lr=lr_t, loss=total))
        if step % cfg.log_every == 0 or step == cfg.total_steps - 1:
            logger.info(f"step {step}/{cfg.total_steps} lr={lr_t:.3e} loss={total:.4f}")
    after = weights_hash(weights)
    if after != before:
        raise ContractViolation("backbone weights changed during retaining-head training")
    return TrainingResult(headset=_headset(params, model_cfg.n_layers), loss_curve=curve, backbone_hash=after)
