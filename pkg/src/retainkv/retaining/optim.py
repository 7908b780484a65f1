"""AdamW with decoupled weight decay and a linear warmup/decay schedule.

Decay is applied before the moment update, ``p <- p * (1 - lr * wd)``, followed by
``p <- p - lr * m_hat / (sqrt(v_hat) + eps)`` with bias-corrected moments.
"""

from dataclasses import dataclass, field

import numpy as np

from retainkv.exceptions import ShapeError
from retainkv.retaining.retaining_models import TrainingConfig

Params = dict[str, np.ndarray]


@dataclass
class AdamWState:
    step: int = 0
    m: Params = field(default_factory=dict)
    v: Params = field(default_factory=dict)

    @classmethod
    def zeros_like(cls, params: Params) -> "AdamWState":
        return cls(
            step=0,
            m={k: np.zeros_like(p) for k, p in params.items()},
            v={k: np.zeros_like(p) for k, p in params.items()},
        )


def adamw_step(
    params: Params,
    grads: Params,
    state: AdamWState,
    lr_t: float,
    betas: tuple[float, float] = (0.9, 0.999),
    eps: float = 1e-8,
    weight_decay: float = 0.01,
) -> tuple[Params, AdamWState]:
    """Return updated parameters and optimizer state; inputs are left untouched."""
    if set(params) != set(grads):
        raise ShapeError(f"parameter names {sorted(params)} do not match gradient names {sorted(grads)}")
    b1, b2 = betas
    t = state.step + 1
    new_params: Params = {}
    new_state = AdamWState(step=t)
    for name, p in params.items():
        g = grads[name]
        if g.shape != p.shape:
            raise ShapeError(f"gradient for {name} has shape {g.shape}, parameter has {p.shape}")
        m = b1 * state.m.get(name, np.zeros_like(p)) + (1.0 - b1) * g
        v = b2 * state.v.get(name, np.zeros_like(p)) + (1.0 - b2) * g * g
        m_hat = m / (1.0 - b1**t)
        v_hat = v / (1.0 - b2**t)
        decayed = p * (1.0 - lr_t * weight_decay)
        new_params[name] = decayed - lr_t * m_hat / (np.sqrt(v_hat) + eps)
        new_state.m[name] = m
        new_state.v[name] = v
    return new_params, new_state


def lr_schedule(step: int, cfg: TrainingConfig) -> float:
    """Linear ramp 0 -> lr over the warmup, then linear decay to 0 at ``total_steps``."""
    if step < 0 or step >= cfg.total_steps:
        return 0.0
    if step < cfg.warmup_steps:
        return cfg.lr * step / cfg.warmup_steps
    return cfg.lr * (cfg.total_steps - step) / (cfg.total_steps - cfg.warmup_steps)
