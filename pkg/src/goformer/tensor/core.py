"""Tensor with tape-based reverse-mode differentiation.

Operations record themselves on the innermost active ``Tape`` when any
input requires a gradient. Outside a tape nothing is recorded, which is
the inference path.
"""

from __future__ import annotations

from typing import Callable, Sequence

import numpy as np

DEFAULT_DTYPE = np.float32


class Tensor:
    __slots__ = ("data", "grad", "requires_grad", "name", "is_leaf")

    def __init__(self, data, requires_grad: bool = False, dtype=None, name: str | None = None):
        if isinstance(data, Tensor):
            data = data.data
        arr = np.asarray(data, dtype=dtype)
        if dtype is None and arr.dtype not in (np.float32, np.float64):
            arr = arr.astype(DEFAULT_DTYPE)
        self.data = arr
        self.grad: np.ndarray | None = None
        self.requires_grad = requires_grad
        self.name = name
        self.is_leaf = True

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def dtype(self):
        return self.data.dtype

    @property
    def size(self) -> int:
        return self.data.size

    def numpy(self) -> np.ndarray:
        return self.data

    def item(self) -> float:
        return float(self.data)

    def zero_grad(self) -> None:
        self.grad = None

    def __repr__(self) -> str:
        tag = f" {self.name!r}" if self.name else ""
        return f"Tensor{tag}(shape={self.shape}, dtype={self.dtype}, requires_grad={self.requires_grad})"

    # operator sugar; implementations live in ops
    def __add__(self, other):
        from goformer.tensor import ops

        return ops.add(self, other)

    __radd__ = __add__

    def __sub__(self, other):
        from goformer.tensor import ops

        return ops.sub(self, other)

    def __rsub__(self, other):
        from goformer.tensor import ops

        return ops.sub(other, self)

    def __mul__(self, other):
        from goformer.tensor import ops

        return ops.mul(self, other)

    __rmul__ = __mul__

    def __neg__(self):
        from goformer.tensor import ops

        return ops.mul(self, -1.0)

    def __matmul__(self, other):
        from goformer.tensor import ops

        return ops.matmul(self, other)

    def reshape(self, *shape):
        from goformer.tensor import ops

        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        return ops.reshape(self, shape)

    def transpose(self, *axes):
        from goformer.tensor import ops

        return ops.transpose(self, axes)

    def sum(self):
        from goformer.tensor import ops

        return ops.sum_all(self)

    def mean(self):
        from goformer.tensor import ops

        return ops.mean_all(self)


class _Record:
    __slots__ = ("out", "inputs", "backward")

    def __init__(self, out: Tensor, inputs: Sequence[Tensor], backward: Callable):
        self.out = out
        self.inputs = inputs
        self.backward = backward


class Tape:
    """Ordered record of differentiable operations.

    Use as a context manager around a forward pass, then call
    ``backward(loss)``.
    """

    _stack: list["Tape"] = []

    def __init__(self):
        self.records: list[_Record] = []

    def __enter__(self) -> "Tape":
        Tape._stack.append(self)
        return self

    def __exit__(self, *exc) -> None:
        Tape._stack.remove(self)

    @classmethod
    def active(cls) -> "Tape | None":
        return cls._stack[-1] if cls._stack else None

    def __len__(self) -> int:
        return len(self.records)

    def backward(self, loss: Tensor, grad: np.ndarray | None = None) -> None:
        """Accumulate d(loss)/d(x) into ``x.grad`` for every recorded input."""
        if grad is None:
            if loss.size != 1:
                raise ValueError("backward needs a scalar loss or an explicit seed gradient")
            grad = np.ones_like(loss.data)
        if loss.is_leaf:
            if loss.requires_grad:
                loss.grad = grad.copy() if loss.grad is None else loss.grad + grad
            return
        grads: dict[int, np.ndarray] = {id(loss): grad}
        for rec in reversed(self.records):
            g = grads.pop(id(rec.out), None)
            if g is None:
                continue
            for t, gi in zip(rec.inputs, rec.backward(g)):
                if gi is None or not t.requires_grad:
                    continue
                if t.is_leaf:
                    t.grad = gi.copy() if t.grad is None else t.grad + gi
                else:
                    key = id(t)
                    prev = grads.get(key)
                    grads[key] = gi if prev is None else prev + gi


def record(out: Tensor, inputs: Sequence[Tensor], backward: Callable) -> Tensor:
    """Attach ``backward`` for ``out`` to the active tape if any input needs grad.

    ``backward`` maps the output gradient to one gradient (or None) per input.
    """
    tape = Tape.active()
    if tape is None or not any(t.requires_grad for t in inputs):
        return out
    out.requires_grad = True
    out.is_leaf = False
    tape.records.append(_Record(out, inputs, backward))
    return out
