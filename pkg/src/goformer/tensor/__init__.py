"""Small reverse-mode autodiff engine with the ops both network families use."""

from goformer.tensor.checkpoint import load_weights, save_weights
from goformer.tensor.core import Tape, Tensor
from goformer.tensor.ops import (
    add,
    avg_pool3x3_same,
    batch_norm,
    conv2d_same,
    cross_entropy,
    dense,
    gelu,
    global_avg_pool,
    layer_norm,
    log_softmax,
    matmul,
    mean_all,
    mhsa,
    mse,
    mul,
    relu,
    reshape,
    sigmoid,
    softmax,
    sub,
    sum_all,
    transpose,
)
from goformer.tensor.optim import AdamState, CosineSchedule, adam_step, cosine_lr


def backward(tape: Tape, loss: Tensor) -> None:
    tape.backward(loss)


__all__ = [
    "AdamState",
    "CosineSchedule",
    "Tape",
    "Tensor",
    "adam_step",
    "add",
    "avg_pool3x3_same",
    "backward",
    "batch_norm",
    "conv2d_same",
    "cosine_lr",
    "cross_entropy",
    "dense",
    "gelu",
    "global_avg_pool",
    "layer_norm",
    "load_weights",
    "log_softmax",
    "matmul",
    "mean_all",
    "mhsa",
    "mse",
    "mul",
    "relu",
    "reshape",
    "save_weights",
    "sigmoid",
    "softmax",
    "sub",
    "sum_all",
    "transpose",
]
