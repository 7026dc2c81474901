"""Differentiable operations over ``Tensor``.

Every op computes its forward with numpy and, when recording, registers a
closure returning one gradient per input (None for non-differentiable
inputs). Spatial ops use 'same' zero padding so 19x19 maps stay 19x19.
"""

from __future__ import annotations

import math

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from goformer.tensor.core import Tape, Tensor, record

# 3x3 convolutions outside a tape are evaluated in chunks of this many samples
INFERENCE_CHUNK = 64


def as_tensor(x, like: Tensor | None = None) -> Tensor:
    if isinstance(x, Tensor):
        return x
    dtype = like.dtype if like is not None else None
    return Tensor(np.asarray(x, dtype=dtype))


def _unbroadcast(g: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    if g.shape == shape:
        return g
    while g.ndim > len(shape):
        g = g.sum(axis=0)
    for axis, n in enumerate(shape):
        if n == 1 and g.shape[axis] != 1:
            g = g.sum(axis=axis, keepdims=True)
    return g


def _recording(*inputs: Tensor) -> bool:
    return Tape.active() is not None and any(t.requires_grad for t in inputs)


# -- elementwise and shape ops ----------------------------------------------


def add(a, b) -> Tensor:
    a = as_tensor(a)
    b = as_tensor(b, a)
    out = Tensor(a.data + b.data)
    return record(out, (a, b), lambda g: (_unbroadcast(g, a.shape), _unbroadcast(g, b.shape)))


def sub(a, b) -> Tensor:
    a = as_tensor(a)
    b = as_tensor(b, a)
    out = Tensor(a.data - b.data)
    return record(out, (a, b), lambda g: (_unbroadcast(g, a.shape), _unbroadcast(-g, b.shape)))


def mul(a, b) -> Tensor:
    a = as_tensor(a)
    b = as_tensor(b, a)
    out = Tensor(a.data * b.data)
    return record(
        out,
        (a, b),
        lambda g: (_unbroadcast(g * b.data, a.shape), _unbroadcast(g * a.data, b.shape)),
    )


def matmul(a: Tensor, b: Tensor) -> Tensor:
    out = Tensor(np.matmul(a.data, b.data))

    def backward(g):
        ga = np.matmul(g, np.swapaxes(b.data, -1, -2))
        gb = np.matmul(np.swapaxes(a.data, -1, -2), g)
        return _unbroadcast(ga, a.shape), _unbroadcast(gb, b.shape)

    return record(out, (a, b), backward)


def reshape(x: Tensor, shape) -> Tensor:
    out = Tensor(x.data.reshape(shape))
    return record(out, (x,), lambda g: (g.reshape(x.shape),))


def transpose(x: Tensor, axes) -> Tensor:
    axes = tuple(axes)
    inverse = tuple(np.argsort(axes))
    out = Tensor(x.data.transpose(axes))
    return record(out, (x,), lambda g: (g.transpose(inverse),))


def sum_all(x: Tensor) -> Tensor:
    out = Tensor(np.asarray(x.data.sum(), dtype=x.dtype))
    return record(out, (x,), lambda g: (np.broadcast_to(g, x.shape).copy(),))


def mean_all(x: Tensor) -> Tensor:
    n = x.size
    out = Tensor(np.asarray(x.data.mean(), dtype=x.dtype))
    return record(out, (x,), lambda g: (np.full(x.shape, g / n, dtype=x.dtype),))


# -- activations --------------------------------------------------------------


def relu(x: Tensor) -> Tensor:
    out = Tensor(np.maximum(x.data, 0))
    return record(out, (x,), lambda g: (g * (x.data > 0),))


_GELU_C = math.sqrt(2.0 / math.pi)


def gelu(x: Tensor) -> Tensor:
    """GELU, tanh approximation."""
    v = x.data
    v2 = v * v
    t = np.tanh(_GELU_C * v * (1.0 + 0.044715 * v2))
    out = Tensor(0.5 * v * (1.0 + t))

    def backward(g):
        dinner = _GELU_C * (1.0 + 3 * 0.044715 * v2)
        return (g * (0.5 * (1.0 + t) + 0.5 * v * (1.0 - t * t) * dinner),)

    return record(out, (x,), backward)


def sigmoid(x: Tensor) -> Tensor:
    s = 0.5 * (np.tanh(0.5 * x.data) + 1.0)
    out = Tensor(s)
    return record(out, (x,), lambda g: (g * s * (1.0 - s),))


def softmax(x: Tensor) -> Tensor:
    """Softmax over the last axis."""
    z = x.data - x.data.max(axis=-1, keepdims=True)
    e = np.exp(z)
    s = e / e.sum(axis=-1, keepdims=True)
    out = Tensor(s)

    def backward(g):
        return (s * (g - (g * s).sum(axis=-1, keepdims=True)),)

    return record(out, (x,), backward)


def log_softmax(x: Tensor) -> Tensor:
    z = x.data - x.data.max(axis=-1, keepdims=True)
    lse = np.log(np.exp(z).sum(axis=-1, keepdims=True))
    logp = z - lse
    out = Tensor(logp)

    def backward(g):
        return (g - np.exp(logp) * g.sum(axis=-1, keepdims=True),)

    return record(out, (x,), backward)


# -- linear layers ------------------------------------------------------------


def dense(x: Tensor, weight: Tensor, bias: Tensor | None = None) -> Tensor:
    """``x @ weight.T + bias`` over the last axis; ``weight`` is (out, in)."""
    if x.shape[-1] != weight.shape[1]:
        raise ValueError(f"dense: input features {x.shape[-1]} != weight in-features {weight.shape[1]}")
    lead = x.shape[:-1]
    x2 = x.data.reshape(-1, x.shape[-1])
    y = x2 @ weight.data.T
    if bias is not None:
        if bias.shape != (weight.shape[0],):
            raise ValueError("dense: bias shape mismatch")
        y += bias.data
    out = Tensor(y.reshape(lead + (weight.shape[0],)))

    def backward(g):
        g2 = g.reshape(-1, weight.shape[0])
        gx = (g2 @ weight.data).reshape(x.shape)
        gw = g2.T @ x2
        gb = g2.sum(axis=0) if bias is not None else None
        return gx, gw, gb

    inputs = (x, weight, bias) if bias is not None else (x, weight)
    return record(out, inputs, backward if bias is not None else lambda g: backward(g)[:2])


def _im2col(x: np.ndarray, k: int) -> np.ndarray:
    """Rows are output pixels (b, i, j); columns are taps ordered (di, dj, c)."""
    b, c, h, w = x.shape
    pad = (k - 1) // 2
    xp = np.pad(x.transpose(0, 2, 3, 1), ((0, 0), (pad, pad), (pad, pad), (0, 0)))
    win = sliding_window_view(xp, (k, k), axis=(1, 2))  # b, h, w, c, k, k
    return win.transpose(0, 1, 2, 4, 5, 3).reshape(b * h * w, k * k * c)


def conv2d_same(x: Tensor, kernel: Tensor, bias: Tensor | None = None) -> Tensor:
    """Stride-1 cross-correlation with zero padding (k-1)/2; output keeps H and W."""
    if x.ndim != 4:
        raise ValueError("conv2d_same expects B x C x H x W input")
    b, c, h, w = x.shape
    o, ck, k, k2 = kernel.shape
    if ck != c:
        raise ValueError(f"conv2d_same: input has {c} channels, kernel expects {ck}")
    if k != k2 or k % 2 == 0:
        raise ValueError("conv2d_same: kernel must be square with odd size")
    if bias is not None and bias.shape != (o,):
        raise ValueError("conv2d_same: bias shape mismatch")
    recording = _recording(x, kernel, *(() if bias is None else (bias,)))
    pad = (k - 1) // 2
    dtype = np.result_type(x.dtype, kernel.dtype)

    if k == 1:
        wm = kernel.data.reshape(o, c)
        xm = x.data.reshape(b, c, h * w)
        y = np.matmul(wm, xm)
        if bias is not None:
            y += bias.data[None, :, None]
        y = y.reshape(b, o, h, w)
    else:
        wm = kernel.data.transpose(0, 2, 3, 1).reshape(o, k * k * c)
        y = np.empty((b, o, h, w), dtype=dtype)
        step = b if recording else INFERENCE_CHUNK
        cols = None
        for s in range(0, b, step):
            part = _im2col(x.data[s : s + step], k)
            ys = part @ wm.T
            if bias is not None:
                ys += bias.data
            n = ys.shape[0] // (h * w)
            y[s : s + n] = ys.reshape(n, h, w, o).transpose(0, 3, 1, 2)
            if recording:
                cols = part
    out = Tensor(y)
    if not recording:
        return out

    def backward(g):
        gb = g.sum(axis=(0, 2, 3)) if bias is not None else None
        if k == 1:
            gm = g.reshape(b, o, h * w)
            gw = np.tensordot(gm, xm, axes=([0, 2], [0, 2])).reshape(kernel.shape)
            gx = np.matmul(wm.T, gm).reshape(x.shape) if x.requires_grad else None
        else:
            g2 = g.transpose(0, 2, 3, 1).reshape(b * h * w, o)
            gw = np.ascontiguousarray((g2.T @ cols).reshape(o, k, k, c).transpose(0, 3, 1, 2))
            if not x.requires_grad:
                return (None, gw, gb) if bias is not None else (None, gw)
            gc = (g2 @ wm).reshape(b, h, w, k, k, c)
            gxp = np.zeros((b, h + 2 * pad, w + 2 * pad, c), dtype=g.dtype)
            for di in range(k):
                for dj in range(k):
                    gxp[:, di : di + h, dj : dj + w, :] += gc[:, :, :, di, dj, :]
            gx = np.ascontiguousarray(gxp[:, pad : pad + h, pad : pad + w, :].transpose(0, 3, 1, 2))
        return (gx, gw, gb) if bias is not None else (gx, gw)

    inputs = (x, kernel, bias) if bias is not None else (x, kernel)
    return record(out, inputs, backward)


# -- normalization ----------------------------------------------------------


def batch_norm(
    x: Tensor,
    gamma: Tensor,
    beta: Tensor,
    running_mean: np.ndarray,
    running_var: np.ndarray,
    training: bool,
    momentum: float = 0.9,
    eps: float = 1e-5,
) -> Tensor:
    """Per-channel normalization of B x C x H x W.

    In training mode batch statistics are used and the running buffers are
    updated in place: ``running = momentum * running + (1 - momentum) * batch``.
    """
    v = x.data
    shape = (1, -1, 1, 1)
    if training:
        n = v.shape[0] * v.shape[2] * v.shape[3]
        mean = v.mean(axis=(0, 2, 3))
        centered = v - mean.reshape(shape)
        var = (centered * centered).mean(axis=(0, 2, 3))
        running_mean *= momentum
        running_mean += (1 - momentum) * mean
        running_var *= momentum
        running_var += (1 - momentum) * var * (n / max(n - 1, 1))
    else:
        mean, var = running_mean, running_var
        centered = v - mean.reshape(shape).astype(v.dtype)
    inv = (1.0 / np.sqrt(var + eps)).astype(v.dtype)
    xhat = centered * inv.reshape(shape)
    out = Tensor(xhat * gamma.data.reshape(shape) + beta.data.reshape(shape))

    def backward(g):
        gbeta = g.sum(axis=(0, 2, 3))
        ggamma = (g * xhat).sum(axis=(0, 2, 3))
        gxhat = g * gamma.data.reshape(shape)
        if training:
            m = v.shape[0] * v.shape[2] * v.shape[3]
            gx = (inv.reshape(shape) / m) * (
                m * gxhat
                - gxhat.sum(axis=(0, 2, 3)).reshape(shape)
                - xhat * (gxhat * xhat).sum(axis=(0, 2, 3)).reshape(shape)
            )
        else:
            gx = gxhat * inv.reshape(shape)
        return gx, ggamma, gbeta

    return record(out, (x, gamma, beta), backward)


def layer_norm(x: Tensor, gamma: Tensor, beta: Tensor, eps: float = 1e-5) -> Tensor:
    """Normalize over the last axis."""
    v = x.data
    mean = v.mean(axis=-1, keepdims=True)
    centered = v - mean
    var = (centered * centered).mean(axis=-1, keepdims=True)
    inv = 1.0 / np.sqrt(var + eps)
    xhat = centered * inv
    out = Tensor(xhat * gamma.data + beta.data)

    def backward(g):
        lead = tuple(range(g.ndim - 1))
        gbeta = g.sum(axis=lead)
        ggamma = (g * xhat).sum(axis=lead)
        gxhat = g * gamma.data
        c = v.shape[-1]
        gx = (inv / c) * (
            c * gxhat - gxhat.sum(axis=-1, keepdims=True) - xhat * (gxhat * xhat).sum(axis=-1, keepdims=True)
        )
        return gx, ggamma, gbeta

    return record(out, (x, gamma, beta), backward)


# -- pooling --------------------------------------------------------------------


def _tap_counts(h: int, w: int, dtype) -> np.ndarray:
    rows = np.full(h, 3.0)
    rows[0] -= 1
    rows[-1] -= 1
    cols = np.full(w, 3.0)
    cols[0] -= 1
    cols[-1] -= 1
    if h == 1:
        rows[:] = 1
    if w == 1:
        cols[:] = 1
    return np.outer(rows, cols).astype(dtype)


def avg_pool3x3_same(x: Tensor) -> Tensor:
    """3x3 mean, stride 1, divided by the number of in-bounds taps."""
    b, c, h, w = x.shape
    xp = np.pad(x.data, ((0, 0), (0, 0), (1, 1), (1, 1)))
    acc = np.zeros_like(x.data)
    for di in range(3):
        for dj in range(3):
            acc += xp[:, :, di : di + h, dj : dj + w]
    counts = _tap_counts(h, w, x.dtype)
    out = Tensor(acc / counts)

    def backward(g):
        gc = np.pad(g / counts, ((0, 0), (0, 0), (1, 1), (1, 1)))
        gx = np.zeros_like(g)
        for di in range(3):
            for dj in range(3):
                gx += gc[:, :, 2 - di : 2 - di + h, 2 - dj : 2 - dj + w]
        return (gx,)

    return record(out, (x,), backward)


def global_avg_pool(x: Tensor) -> Tensor:
    b, c, h, w = x.shape
    out = Tensor(x.data.mean(axis=(2, 3)))
    return record(out, (x,), lambda g: (np.broadcast_to(g[:, :, None, None] / (h * w), x.shape).copy(),))


# -- attention ------------------------------------------------------------------


def mhsa(
    x: Tensor,
    heads: int,
    wq: Tensor,
    wk: Tensor,
    wv: Tensor,
    wo: Tensor,
    attn_bias: Tensor | None = None,
    bq: Tensor | None = None,
    bk: Tensor | None = None,
    bv: Tensor | None = None,
    bo: Tensor | None = None,
) -> Tensor:
    """Multi-head self-attention over B x T x C tokens.

    Per head: softmax(Q K^T / sqrt(C / heads) + attn_bias[head]) V; heads are
    concatenated and projected by ``wo``.
    """
    b, t, c = x.shape
    if c % heads:
        raise ValueError(f"mhsa: channels {c} not divisible by heads {heads}")
    d = c // heads

    def split(z: Tensor) -> Tensor:
        return transpose(reshape(z, (b, t, heads, d)), (0, 2, 1, 3))

    q = split(dense(x, wq, bq))
    k = split(dense(x, wk, bk))
    v = split(dense(x, wv, bv))
    scores = mul(matmul(q, transpose(k, (0, 1, 3, 2))), 1.0 / math.sqrt(d))
    if attn_bias is not None:
        if attn_bias.shape != (heads, t, t):
            raise ValueError(f"mhsa: attention bias must be {(heads, t, t)}, got {attn_bias.shape}")
        scores = add(scores, attn_bias)
    attn = softmax(scores)
    ctx = reshape(transpose(matmul(attn, v), (0, 2, 1, 3)), (b, t, c))
    return dense(ctx, wo, bo)


# -- losses -------------------------------------------------------------------


def cross_entropy(logits: Tensor, target: np.ndarray) -> Tensor:
    """Mean negative log-likelihood of integer targets over the last axis."""
    target = np.asarray(target, dtype=np.int64)
    bsz = logits.shape[0]
    z = logits.data - logits.data.max(axis=-1, keepdims=True)
    lse = np.log(np.exp(z).sum(axis=-1))
    rows = np.arange(bsz)
    loss = (lse - z[rows, target]).mean()
    out = Tensor(np.asarray(loss, dtype=logits.dtype))

    def backward(g):
        p = np.exp(z - lse[:, None])
        p[rows, target] -= 1.0
        return (p * (g / bsz),)

    return record(out, (logits,), backward)


def mse(pred: Tensor, target) -> Tensor:
    target = np.asarray(target, dtype=pred.dtype).reshape(pred.shape)
    diff = pred.data - target
    n = diff.size
    out = Tensor(np.asarray((diff * diff).mean(), dtype=pred.dtype))
    return record(out, (pred,), lambda g: (g * 2.0 * diff / n,))
