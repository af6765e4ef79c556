from .gradcheck import GradCheckReport, finite_diff_check, relative_error
from .optim import AdamState, adam_step
from .params import ParamStore
from .tensor import (
    DimensionError,
    Tape,
    Tensor,
    add,
    backward,
    bias_add,
    concat,
    cross_entropy,
    elementwise,
    hadamard,
    layer_norm,
    log_softmax_rows,
    matmul,
    mean,
    relu,
    reshape,
    scale,
    sigmoid,
    split,
    softmax_rows,
    stack,
    sub,
    sum_squares,
    swap_last,
    take,
    tanh,
    tensor,
    tsum,
    unstack,
    zeros,
)

__all__ = [
    "AdamState",
    "DimensionError",
    "GradCheckReport",
    "ParamStore",
    "Tape",
    "Tensor",
    "adam_step",
    "add",
    "backward",
    "bias_add",
    "concat",
    "cross_entropy",
    "elementwise",
    "finite_diff_check",
    "hadamard",
    "layer_norm",
    "log_softmax_rows",
    "matmul",
    "mean",
    "relative_error",
    "relu",
    "reshape",
    "scale",
    "sigmoid",
    "softmax_rows",
    "split",
    "stack",
    "sub",
    "sum_squares",
    "swap_last",
    "take",
    "tanh",
    "tensor",
    "tsum",
    "unstack",
    "zeros",
]
