"""Dense kernels shared by the backbone, the retaining heads and the eviction pipeline.

All reductions whose operands can carry masked (exactly zero) tails accumulate strictly
left to right. A row computed over a prefix of keys therefore matches, bit for bit, the
same row computed over a longer key range whose extra entries are masked out. Chunked
prefill relies on this to reproduce a single full pass exactly.
"""

from collections.abc import Sequence
from typing import TypeAlias

import icontract
import numpy as np
import numpy.typing as npt

from retainkv.exceptions import ContractViolation, ShapeError
from retainkv.numerics.precision import dtype

Mat: TypeAlias = npt.NDArray[np.floating]

# m*k*n element budget for the broadcast-and-accumulate path of matmul.
_BLOCKED_ELEMENTS = 1 << 21


def _all_finite(result: np.ndarray) -> bool:
    return bool(np.isfinite(result).all())


def as_mat(x: npt.ArrayLike) -> Mat:
    """Coerce ``x`` to a 2-D array of the active precision."""
    arr = np.asarray(x, dtype=dtype())
    if arr.ndim == 1:
        arr = arr[None, :]
    if arr.ndim != 2:
        raise ShapeError(f"expected a matrix, got an array of rank {arr.ndim}")
    return arr


def seq_sum(a: np.ndarray, axis: int = -1) -> np.ndarray:
    """Sum along ``axis`` accumulating left to right."""
    a = np.asarray(a)
    if a.shape[axis] == 0:
        return np.zeros(np.delete(a.shape, axis % a.ndim), dtype=a.dtype)
    return np.take(np.add.accumulate(a, axis=axis), -1, axis=axis)


@icontract.ensure(lambda result: _all_finite(result))
def matmul(a: npt.ArrayLike, b: npt.ArrayLike) -> Mat:
    """Matrix product with a fixed summation order over the inner dimension.

    Each output element is ``((a[i,0] b[0,j] + a[i,1] b[1,j]) + a[i,2] b[2,j]) + ...``.
    Both code paths below perform exactly these additions, so the choice between them
    never changes a result.

    Raises:
        ShapeError: If the inner dimensions disagree.
    """
    a, b = as_mat(a), as_mat(b)
    m, k = a.shape
    k2, n = b.shape
    if k != k2:
        raise ShapeError(f"matmul inner dimensions disagree: {a.shape} x {b.shape}")
    if k == 0:
        return np.zeros((m, n), dtype=a.dtype)
    if m * k * n <= _BLOCKED_ELEMENTS:
        products = a[:, :, None] * b[None, :, :]
        return np.add.accumulate(products, axis=1)[:, -1, :]
    out = a[:, 0:1] * b[0:1, :]
    for t in range(1, k):
        out = out + a[:, t : t + 1] * b[t : t + 1, :]
    return out


@icontract.ensure(lambda result: _all_finite(result))
def softmax_rows(a: npt.ArrayLike, mask: np.ndarray | None = None) -> Mat:
    """Row-wise softmax, max-subtracted.

    ``mask`` marks visible entries; hidden entries come out as exact zeros and take no
    part in the row maximum.
    """
    a = as_mat(a)
    if mask is not None:
        mask = np.asarray(mask, dtype=bool)
        if mask.shape != a.shape:
            raise ShapeError(f"mask shape {mask.shape} does not match scores {a.shape}")
        if a.shape[1] and not mask.any(axis=1).all():
            raise ContractViolation("softmax row without any visible entry")
        a = np.where(mask, a, -np.inf)
    row_max = a.max(axis=1, keepdims=True)
    e = np.exp(a - row_max)
    return e / seq_sum(e, axis=1)[:, None]


def rope_apply(x: npt.ArrayLike, positions: Sequence[int] | np.ndarray, theta_base: float) -> Mat:
    """Rotate pairs ``(x[2i], x[2i+1])`` by ``pos * theta_base**(-2i/d)``.

    Angles are evaluated in double precision whatever the active mode.
    """
    x = as_mat(x)
    n, d = x.shape
    if d % 2:
        raise ShapeError(f"rotary embedding needs an even width, got {d}")
    pos = np.asarray(positions, dtype=np.int64).reshape(-1)
    if pos.shape[0] != n:
        raise ShapeError(f"{pos.shape[0]} positions for {n} rows")
    if pos.size and pos.min() < 0:
        raise ContractViolation("rotary positions must be non-negative")
    inv_freq = float(theta_base) ** (-np.arange(0, d, 2, dtype=np.float64) / d)
    angles = pos[:, None].astype(np.float64) * inv_freq[None, :]
    cos = np.cos(angles).astype(x.dtype)
    sin = np.sin(angles).astype(x.dtype)
    even, odd = x[:, 0::2], x[:, 1::2]
    out = np.empty_like(x)
    out[:, 0::2] = even * cos - odd * sin
    out[:, 1::2] = even * sin + odd * cos
    return out


def top_b_indices(scores: Sequence[float] | np.ndarray, b: int) -> np.ndarray:
    """Ascending indices of the ``b`` largest scores; ties go to the larger index.

    >>> top_b_indices([0.5, 0.9, 0.5, 0.1], 2).tolist()
    [1, 2]
    """
    if b < 0:
        raise ContractViolation(f"budget must be non-negative, got {b}")
    s = np.asarray(scores, dtype=np.float64).reshape(-1)
    n = s.shape[0]
    if b >= n:
        return np.arange(n)
    if b == 0:
        return np.zeros(0, dtype=np.int64)
    order = np.lexsort((np.arange(n), s))
    return np.sort(order[n - b :])


def sigmoid(x: npt.ArrayLike) -> np.ndarray:
    x = np.asarray(x, dtype=dtype())
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    e = np.exp(x[~pos])
    out[~pos] = e / (1.0 + e)
    return out


def silu(x: npt.ArrayLike) -> np.ndarray:
    x = np.asarray(x, dtype=dtype())
    return x * sigmoid(x)


def silu_grad(x: npt.ArrayLike) -> np.ndarray:
    x = np.asarray(x, dtype=dtype())
    s = sigmoid(x)
    return s * (1.0 + x * (1.0 - s))


def rmsnorm(x: npt.ArrayLike, gain: npt.ArrayLike, eps: float) -> np.ndarray:
    """Divide each row by its root mean square, then scale by ``gain``."""
    if eps <= 0:
        raise ContractViolation(f"rmsnorm eps must be positive, got {eps}")
    x = np.asarray(x, dtype=dtype())
    gain = np.asarray(gain, dtype=x.dtype)
    ms = seq_sum(x * x, axis=-1) / x.shape[-1]
    return x / np.sqrt(ms + eps)[..., None] * gain


def smooth_l1(x: npt.ArrayLike) -> np.ndarray:
    """Huber loss with transition point 1."""
    x = np.asarray(x, dtype=dtype())
    ax = np.abs(x)
    return np.where(ax < 1.0, 0.5 * x * x, ax - 0.5)


def smooth_l1_grad(x: npt.ArrayLike) -> np.ndarray:
    x = np.asarray(x, dtype=dtype())
    return np.where(np.abs(x) < 1.0, x, np.sign(x))


def logsumexp(row: npt.ArrayLike) -> float:
    row = np.asarray(row, dtype=np.float64).reshape(-1)
    top = row.max()
    return float(top + np.log(seq_sum(np.exp(row - top))))


def relative_error(a: npt.ArrayLike, b: npt.ArrayLike) -> float:
    """``max|a-b| / max(max|a|, max|b|, 1e-12)``."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ShapeError(f"cannot compare shapes {a.shape} and {b.shape}")
    if a.size == 0:
        return 0.0
    scale = max(float(np.abs(a).max()), float(np.abs(b).max()), 1e-12)
    return float(np.abs(a - b).max()) / scale
