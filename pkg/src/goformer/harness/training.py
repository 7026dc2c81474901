"""Training loop and policy/value metrics."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from goformer.features import PASS_INDEX, TrainingSample
from goformer.harness.records import RecordSet
from goformer.models.network import Network, forward, predict
from goformer.tensor import AdamState, CosineSchedule, Tape, Tensor, adam_step, cosine_lr, ops

log = logging.getLogger(__name__)


class TrainingDiverged(RuntimeError):
    pass


@dataclass(frozen=True)
class TrainingConfig:
    epochs: int = 20
    states_per_epoch: int = 10_000
    batch_size: int = 64
    eta0: float = 2e-3
    eta_min: float = 0.0
    seed: int = 0
    holdout: float = 0.1
    checkpoint_dir: str | None = None

    def __post_init__(self):
        if self.epochs < 1 or self.states_per_epoch < 1 or self.batch_size < 1:
            raise ValueError("epochs, states_per_epoch and batch_size must be positive")
        if self.eta0 < 0 or not 0 <= self.eta_min <= self.eta0:
            raise ValueError("need 0 <= eta_min <= eta0")
        if not 0 <= self.holdout < 1:
            raise ValueError("holdout must lie in [0, 1)")

    @property
    def steps_per_epoch(self) -> int:
        return math.ceil(self.states_per_epoch / self.batch_size)

    @property
    def total_steps(self) -> int:
        return self.epochs * self.steps_per_epoch


@dataclass
class MetricsReport:
    accuracy: float
    mse: float
    mae: float
    count: int
    epoch_loss: list[float] = field(default_factory=list)
    step_loss: list[float] = field(default_factory=list)
    epochs: list[dict] = field(default_factory=list)

    def row(self) -> str:
        return f"accuracy {self.accuracy:.4f}  mse {self.mse:.5f}  mae {self.mae:.5f}  n {self.count}"


def as_records(data: RecordSet | Sequence[TrainingSample]) -> RecordSet:
    return data if isinstance(data, RecordSet) else RecordSet.from_samples(list(data))


def combined_loss(net: Network, planes: np.ndarray, policy: np.ndarray, value: np.ndarray, mode: str = "train"):
    """Policy cross-entropy plus value MSE; returns (loss, policy part, value part)."""
    dtype = net.parameters()[0].data.dtype
    out = forward(net, Tensor(planes.astype(dtype, copy=False)), mode)
    p_loss = ops.cross_entropy(out.policy_logits, policy)
    v_loss = ops.mse(out.value, value.reshape(-1, 1).astype(dtype))
    return ops.add(p_loss, v_loss), p_loss, v_loss


def grad_norms(net: Network) -> dict[str, float]:
    return {
        name: float(np.sqrt(np.sum(p.grad.astype(np.float64) ** 2))) if p.grad is not None else 0.0
        for name, p in net.named_parameters()
    }


def train_step(net: Network, batch: RecordSet, opt: AdamState, lr: float) -> float:
    net.zero_grad()
    with Tape() as tape:
        loss, _, _ = combined_loss(net, batch.planes, batch.policy, batch.value, "train")
    value = float(loss.data)
    if not math.isfinite(value):
        norms = grad_norms(net)
        worst = sorted(norms.items(), key=lambda kv: -kv[1])[:3]
        raise TrainingDiverged(f"non-finite loss {value} at lr {lr:g}; largest grad norms {worst}")
    tape.backward(loss)
    adam_step(net.parameters(), opt, lr)
    return value


def _epoch_indices(n: int, count: int, rng: np.random.Generator) -> np.ndarray:
    """``count`` indices made of back-to-back shuffles of range(n)."""
    reps = math.ceil(count / n)
    return np.concatenate([rng.permutation(n) for _ in range(reps)])[:count]


def train(
    net: Network,
    dataset: RecordSet | Sequence[TrainingSample],
    cfg: TrainingConfig,
    on_epoch: Callable[[int, MetricsReport], bool | None] | None = None,
) -> tuple[Network, MetricsReport]:
    """Adam with cosine annealing over ``cfg.total_steps``; pass targets are dropped.

    Metrics are computed each epoch on a held-out slice (the training data
    itself when ``cfg.holdout`` is 0). ``on_epoch`` may return True to stop early.
    """
    data = as_records(dataset)
    data = data.subset(np.flatnonzero(data.policy != PASS_INDEX))
    if len(data) == 0:
        raise ValueError("dataset has no non-pass samples")
    rng = np.random.default_rng(cfg.seed)
    order = rng.permutation(len(data))
    n_held = int(len(data) * cfg.holdout)
    held = data.subset(order[:n_held]) if n_held else data
    train_set = data.subset(order[n_held:]) if n_held else data

    sched = CosineSchedule(cfg.eta0, cfg.eta_min, cfg.total_steps)
    opt = AdamState()
    step = 0
    report = MetricsReport(0.0, 0.0, 0.0, 0)
    ckpt_dir = Path(cfg.checkpoint_dir) if cfg.checkpoint_dir else None
    if ckpt_dir:
        ckpt_dir.mkdir(parents=True, exist_ok=True)
    for epoch in range(cfg.epochs):
        idx = _epoch_indices(len(train_set), cfg.steps_per_epoch * cfg.batch_size, rng)
        losses = []
        for b in range(cfg.steps_per_epoch):
            batch = train_set.subset(idx[b * cfg.batch_size : (b + 1) * cfg.batch_size])
            losses.append(train_step(net, batch, opt, cosine_lr(step, sched)))
            step += 1
        metrics = evaluate(net, held)
        report.step_loss.extend(losses)
        report.epoch_loss.append(float(np.mean(losses)))
        report.epochs.append(
            {"epoch": epoch + 1, "loss": report.epoch_loss[-1], "accuracy": metrics.accuracy,
             "mse": metrics.mse, "mae": metrics.mae, "lr": cosine_lr(step, sched)}
        )  # fmt: skip
        report.accuracy, report.mse, report.mae, report.count = metrics.accuracy, metrics.mse, metrics.mae, metrics.count
        log.info("epoch %d loss %.4f %s", epoch + 1, report.epoch_loss[-1], metrics.row())
        if ckpt_dir:
            net.save(ckpt_dir / f"epoch_{epoch + 1:03d}.gowt")
        if on_epoch and on_epoch(epoch + 1, report):
            break
    return net, report


Predictor = Callable[[np.ndarray], tuple[np.ndarray, np.ndarray]]


def evaluate(net: Network | Predictor, test_set: RecordSet | Sequence[TrainingSample], batch_size: int = 256) -> MetricsReport:
    """Top-1 policy accuracy over non-pass targets; value MSE and MAE over all samples.

    ``net`` may be a Network or any callable mapping planes to (logits, values).
    """
    data = as_records(test_set)
    if len(data) == 0:
        raise ValueError("empty test set")
    fn = (lambda x: predict(net, x)) if isinstance(net, Network) else net
    hits = counted = 0
    sq = ab = 0.0
    for i in range(0, len(data), batch_size):
        logits, values = fn(data.planes[i : i + batch_size])
        target = data.policy[i : i + batch_size]
        board = target != PASS_INDEX
        hits += int(np.sum(np.argmax(logits, axis=1)[board] == target[board]))
        counted += int(board.sum())
        err = np.asarray(values, dtype=np.float64).reshape(-1) - data.value[i : i + batch_size]
        batch_mse = float(np.mean(err**2))
        batch_mae = float(np.mean(np.abs(err)))
        assert batch_mse <= batch_mae * float(np.max(np.abs(err))) + 1e-12
        sq += float(np.sum(err**2))
        ab += float(np.sum(np.abs(err)))
    n = len(data)
    return MetricsReport(hits / counted if counted else 0.0, sq / n, ab / n, n)
