"""Central-difference gradients, the oracle for hand-derived backpropagation."""

from collections.abc import Callable

import numpy as np
import numpy.typing as npt

from retainkv.exceptions import ContractViolation, EvaluationError
from retainkv.numerics.kernels import relative_error


def _evaluate(f: Callable[[np.ndarray], float], x: np.ndarray) -> float:
    value = float(f(x))
    if not np.isfinite(value):
        raise EvaluationError(f"function returned a non-finite value {value}")
    return value


def finite_diff_grad(
    f: Callable[[np.ndarray], float], x: npt.ArrayLike, eps: float = 1e-5
) -> np.ndarray:
    """Return ``(f(x + eps e_i) - f(x - eps e_i)) / (2 eps)`` for every coordinate of ``x``.

    ``x`` may have any shape; the gradient has the same shape. Evaluation happens in
    double precision on a private copy, so ``f`` may keep references to its argument.
    """
    if eps <= 0:
        raise ContractViolation(f"finite-difference step must be positive, got {eps}")
    x = np.array(x, dtype=np.float64)
    grad = np.zeros_like(x)
    for i in range(x.size):
        original = x.flat[i]
        x.flat[i] = original + eps
        upper = _evaluate(f, x)
        x.flat[i] = original - eps
        lower = _evaluate(f, x)
        x.flat[i] = original
        grad.flat[i] = (upper - lower) / (2.0 * eps)
    return grad


def check_grad(
    f: Callable[[np.ndarray], float],
    x: npt.ArrayLike,
    analytic: npt.ArrayLike,
    eps: float = 1e-5,
) -> float:
    """Relative error between ``analytic`` and the central-difference gradient of ``f``."""
    return relative_error(analytic, finite_diff_grad(f, x, eps))
