"""Parameterized building blocks on top of ``goformer.tensor``."""

from __future__ import annotations

import math
from typing import Iterator

import numpy as np

from goformer.tensor import Tensor, ops


class Module:
    """Parameter container; attributes that are Tensors with ``requires_grad``
    become parameters, Modules become children, numpy arrays in ``buffers``
    are non-trainable state."""

    def __init__(self):
        object.__setattr__(self, "_params", {})
        object.__setattr__(self, "_children", {})
        object.__setattr__(self, "buffers", {})
        object.__setattr__(self, "training", False)

    def __setattr__(self, name, value):
        if isinstance(value, Tensor) and value.requires_grad:
            self._params[name] = value
        elif isinstance(value, Module):
            self._children[name] = value
        elif isinstance(value, (list, tuple)) and value and all(isinstance(v, Module) for v in value):
            for i, v in enumerate(value):
                self._children[f"{name}.{i}"] = v
        object.__setattr__(self, name, value)

    def named_parameters(self, prefix: str = "") -> Iterator[tuple[str, Tensor]]:
        for name, p in self._params.items():
            yield prefix + name, p
        for name, child in self._children.items():
            yield from child.named_parameters(f"{prefix}{name}.")

    def named_buffers(self, prefix: str = "") -> Iterator[tuple[str, np.ndarray]]:
        for name, b in self.buffers.items():
            yield prefix + name, b
        for name, child in self._children.items():
            yield from child.named_buffers(f"{prefix}{name}.")

    def parameters(self) -> list[Tensor]:
        return [p for _, p in self.named_parameters()]

    def modules(self) -> Iterator["Module"]:
        yield self
        for child in self._children.values():
            yield from child.modules()

    def train(self, mode: bool = True) -> "Module":
        for m in self.modules():
            object.__setattr__(m, "training", mode)
        return self

    def eval(self) -> "Module":
        return self.train(False)

    def astype(self, dtype) -> "Module":
        for _, p in self.named_parameters():
            p.data = p.data.astype(dtype)
            p.grad = None
        for m in self.modules():
            for k, b in list(m.buffers.items()):
                m.buffers[k] = b.astype(dtype)
        return self

    def zero_grad(self) -> None:
        for p in self.parameters():
            p.grad = None


def _he_normal(rng: np.random.Generator, shape, fan_in: int) -> Tensor:
    std = math.sqrt(2.0 / fan_in)
    return Tensor(rng.normal(0.0, std, size=shape).astype(np.float32), requires_grad=True)


def _const(shape, value: float) -> Tensor:
    return Tensor(np.full(shape, value, dtype=np.float32), requires_grad=True)


class Conv(Module):
    def __init__(self, cin: int, cout: int, k: int, rng: np.random.Generator, bias: bool = True):
        super().__init__()
        self.weight = _he_normal(rng, (cout, cin, k, k), cin * k * k)
        self.bias = _const((cout,), 0.0) if bias else None

    def __call__(self, x: Tensor) -> Tensor:
        return ops.conv2d_same(x, self.weight, self.bias)


class BatchNorm(Module):
    def __init__(self, channels: int):
        super().__init__()
        self.gamma = _const((channels,), 1.0)
        self.beta = _const((channels,), 0.0)
        self.buffers["running_mean"] = np.zeros(channels, dtype=np.float32)
        self.buffers["running_var"] = np.ones(channels, dtype=np.float32)

    def __call__(self, x: Tensor) -> Tensor:
        return ops.batch_norm(
            x, self.gamma, self.beta, self.buffers["running_mean"], self.buffers["running_var"], self.training
        )


class Dense(Module):
    def __init__(self, fin: int, fout: int, rng: np.random.Generator, bias: bool = True):
        super().__init__()
        self.weight = _he_normal(rng, (fout, fin), fin)
        self.bias = _const((fout,), 0.0) if bias else None

    def __call__(self, x: Tensor) -> Tensor:
        return ops.dense(x, self.weight, self.bias)


class LayerNorm(Module):
    def __init__(self, channels: int):
        super().__init__()
        self.gamma = _const((channels,), 1.0)
        self.beta = _const((channels,), 0.0)

    def __call__(self, x: Tensor) -> Tensor:
        return ops.layer_norm(x, self.gamma, self.beta)


class Attention(Module):
    def __init__(self, channels: int, heads: int, tokens: int, rng: np.random.Generator):
        super().__init__()
        if channels % heads:
            raise ValueError(f"channels {channels} not divisible by heads {heads}")
        self.heads = heads
        self.q = Dense(channels, channels, rng)
        self.k = Dense(channels, channels, rng)
        self.v = Dense(channels, channels, rng)
        self.proj = Dense(channels, channels, rng)
        # learned per-head token-pair bias, the only positional signal
        self.attn_bias = _const((heads, tokens, tokens), 0.0)

    def __call__(self, x: Tensor) -> Tensor:
        return ops.mhsa(
            x, self.heads,
            self.q.weight, self.k.weight, self.v.weight, self.proj.weight,
            self.attn_bias,
            self.q.bias, self.k.bias, self.v.bias, self.proj.bias,
        )  # fmt: skip
