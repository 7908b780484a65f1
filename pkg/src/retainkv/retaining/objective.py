"""Retaining-head scores, the training loss and its analytic gradient.

Per layer, with ``X`` the tokens' ``[Q, K, V]`` rows::

    H = X W1,  A = silu(H),  S = A W2
    loss = sum SmoothL1(S - Y) + alpha * sum_k (S[k] - S[k+1])**2

``reduction="mean"`` divides the whole loss by the prompt length.
"""

from typing import Literal

import numpy as np

from retainkv.exceptions import ContractViolation, ShapeError
from retainkv.numerics import matmul, silu, silu_grad, smooth_l1, smooth_l1_grad
from retainkv.retaining.retaining_models import RetainingHead, ScoreTensor

Reduction = Literal["sum", "mean"]


def predict_layer(head: RetainingHead, x: np.ndarray) -> np.ndarray:
    """Scores (n_tokens, h/g) for stacked head inputs ``x``."""
    x = np.atleast_2d(x)
    if x.shape[1] != head.w1.shape[0]:
        raise ShapeError(f"head input width {x.shape[1]} does not match W1 rows {head.w1.shape[0]}")
    return matmul(silu(matmul(x, head.w1)), head.w2)


def predict_cis(head: RetainingHead, q: np.ndarray, k: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Scores from the concatenation ``[q, k, v]``. Rows are tokens; a single token may be
    passed as vectors, in which case one score per KV head comes back."""
    single = np.ndim(q) == 1
    x = np.hstack([np.atleast_2d(q), np.atleast_2d(k), np.atleast_2d(v)])
    scores = predict_layer(head, x)
    return scores[0] if single else scores


def _reduce(total: float, n_q: int, reduction: Reduction) -> float:
    if reduction == "mean":
        return total / n_q
    if reduction == "sum":
        return total
    raise ContractViolation(f"unknown loss reduction {reduction!r}")


def loss(pred: ScoreTensor, labels: ScoreTensor, alpha: float, reduction: Reduction = "sum") -> float:
    """Loss over a full (L, h/g, n_q) score tensor."""
    pred = np.asarray(pred, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.float64)
    if pred.shape != labels.shape:
        raise ShapeError(f"prediction shape {pred.shape} does not match labels {labels.shape}")
    regression = float(np.sum(smooth_l1(pred - labels)))
    diffs = pred[..., :-1] - pred[..., 1:]
    total = regression + alpha * float(np.sum(diffs * diffs))
    return _reduce(total, pred.shape[-1], reduction)


def loss_and_grad(
    head: RetainingHead,
    x: np.ndarray,
    labels: np.ndarray,
    alpha: float,
    reduction: Reduction = "sum",
) -> tuple[float, np.ndarray, np.ndarray]:
    """One layer's loss and its gradients ``(dW1, dW2)``; ``labels`` is (h/g, n_q)."""
    h = matmul(x, head.w1)
    a = silu(h)
    s = matmul(a, head.w2)
    y = np.asarray(labels).T
    if s.shape != y.shape:
        raise ShapeError(f"scores {s.shape} do not match labels {y.shape}")
    resid = s - y
    d_s = smooth_l1_grad(resid)
    adjacent = s[:-1] - s[1:]
    d_s[:-1] += 2.0 * alpha * adjacent
    d_s[1:] -= 2.0 * alpha * adjacent
    total = float(np.sum(smooth_l1(resid))) + alpha * float(np.sum(adjacent * adjacent))
    n_q = s.shape[0]
    if reduction == "mean":
        d_s = d_s / n_q
    value = _reduce(total, n_q, reduction)
    d_w2 = matmul(a.T, d_s)
    d_h = matmul(d_s, head.w2.T) * silu_grad(h)
    d_w1 = matmul(np.asarray(x).T, d_h)
    return value, d_w1, d_w2


def grad_head(
    head: RetainingHead,
    x: np.ndarray,
    labels: np.ndarray,
    alpha: float,
    reduction: Reduction = "sum",
) -> tuple[np.ndarray, np.ndarray]:
    _, d_w1, d_w2 = loss_and_grad(head, x, labels, alpha, reduction)
    return d_w1, d_w2
