from retainkv.numerics.gradcheck import check_grad, finite_diff_grad
from retainkv.numerics.kernels import (
    Mat,
    as_mat,
    logsumexp,
    matmul,
    relative_error,
    rmsnorm,
    rope_apply,
    seq_sum,
    sigmoid,
    silu,
    silu_grad,
    smooth_l1,
    smooth_l1_grad,
    softmax_rows,
    top_b_indices,
)
from retainkv.numerics.precision import (
    Precision,
    Tolerances,
    active_precision,
    dtype,
    set_precision,
    tolerances,
    use_precision,
)

__all__ = [
    "Mat",
    "Precision",
    "Tolerances",
    "active_precision",
    "as_mat",
    "check_grad",
    "dtype",
    "finite_diff_grad",
    "logsumexp",
    "matmul",
    "relative_error",
    "rmsnorm",
    "rope_apply",
    "seq_sum",
    "set_precision",
    "sigmoid",
    "silu",
    "silu_grad",
    "smooth_l1",
    "smooth_l1_grad",
    "softmax_rows",
    "tolerances",
    "top_b_indices",
    "use_precision",
]
