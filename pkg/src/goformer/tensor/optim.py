"""Adam with bias correction and cosine annealing without restarts."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from goformer.tensor.core import Tensor


@dataclass
class AdamState:
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    t: int = 0
    m: list[np.ndarray] = field(default_factory=list)
    v: list[np.ndarray] = field(default_factory=list)


def adam_step(params: Sequence[Tensor], state: AdamState, lr: float, grads: Sequence[np.ndarray | None] | None = None) -> None:
    """One bias-corrected Adam update, in place on ``params``.

    Gradients default to each parameter's ``.grad``; missing gradients count as zero.
    """
    if not state.m:
        state.m = [np.zeros_like(p.data) for p in params]
        state.v = [np.zeros_like(p.data) for p in params]
    if len(state.m) != len(params):
        raise ValueError("parameter list changed between Adam steps")
    if grads is None:
        grads = [p.grad for p in params]
    state.t += 1
    b1, b2 = state.beta1, state.beta2
    c1 = 1.0 - b1**state.t
    c2 = 1.0 - b2**state.t
    for p, g, m, v in zip(params, grads, state.m, state.v):
        if g is None:
            g = np.zeros_like(p.data)
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * (g * g)
        if lr == 0.0:
            continue
        step = (lr / c1) * m / (np.sqrt(v / c2) + state.eps)
        p.data -= step.astype(p.data.dtype)


@dataclass(frozen=True)
class CosineSchedule:
    eta0: float
    eta_min: float
    total_steps: int

    def __post_init__(self):
        if self.eta0 < 0:
            raise ValueError("eta0 must be non-negative")
        if self.eta_min < 0 or self.eta_min > self.eta0:
            raise ValueError("need 0 <= eta_min <= eta0")
        if self.total_steps <= 0:
            raise ValueError("total_steps must be positive")


def cosine_lr(t: int, sched: CosineSchedule) -> float:
    """eta_min + (eta0 - eta_min) * (1 + cos(pi * t / T)) / 2, held at eta_min past T."""
    t = min(max(t, 0), sched.total_steps)
    if t == sched.total_steps:
        return sched.eta_min
    return sched.eta_min + 0.5 * (sched.eta0 - sched.eta_min) * (1.0 + math.cos(math.pi * t / sched.total_steps))
