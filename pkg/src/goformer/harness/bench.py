"""Inference latency and throughput benchmark.

Per (network, batch): ``warmup`` untimed calls, then ``runs`` runs of
``calls`` timed calls each. Latency is the median of the run means;
evaluations per second is batch / latency.
"""

from __future__ import annotations

import statistics
import time
import tracemalloc
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, NamedTuple, Sequence

import numpy as np

from goformer.features import GRID, NUM_PLANES
from goformer.harness.reports import aligned, to_csv, write_report
from goformer.models.network import Network, parameter_count, predict

COLUMNS = ("Network", "Batch", "Parameters", "Latency", "Evaluations per second", "Peak Memory")


class Benchable(NamedTuple):
    """Anything with a name, a batch predictor and a parameter count."""

    name: str
    predict: Callable[[np.ndarray], object]
    params: int


@dataclass(frozen=True)
class BenchConfig:
    warmup: int = 100
    calls: int = 100
    runs: int = 7
    memory: bool = True
    seed: int = 0

    def __post_init__(self):
        if self.warmup < 0 or self.calls < 1 or self.runs < 1:
            raise ValueError("need warmup >= 0, calls >= 1 and runs >= 1")


@dataclass
class BenchRow:
    network: str
    batch: int
    params: int
    latency: float
    evals_per_sec: float
    peak_memory: int | None
    run_means: list[float] = field(default_factory=list)

    def cells(self) -> tuple[str, ...]:
        mem = "-" if self.peak_memory is None else f"{self.peak_memory:,}"
        return (self.network, str(self.batch), f"{self.params:,}", f"{self.latency:.4f}", f"{self.evals_per_sec:.2f}", mem)


@dataclass
class BenchReport:
    rows: list[BenchRow] = field(default_factory=list)
    config: BenchConfig = BenchConfig()

    def text(self) -> str:
        return aligned(COLUMNS, [r.cells() for r in self.rows])

    def csv_rows(self) -> list[list[object]]:
        return [
            [r.network, r.batch, r.params, f"{r.latency:.6f}", f"{r.evals_per_sec:.4f}", "" if r.peak_memory is None else r.peak_memory]
            for r in self.rows
        ]

    def csv(self) -> str:
        return to_csv(COLUMNS, self.csv_rows())

    def write(self, path: str | Path) -> tuple[Path, Path]:
        """Write ``<path>.txt`` and ``<path>.csv``; returns both paths."""
        return write_report(path, COLUMNS, [r.cells() for r in self.rows], self.csv_rows())


def as_benchable(net: Network | Benchable) -> Benchable:
    if isinstance(net, Benchable):
        return net
    return Benchable(net.display_name, lambda x: predict(net, x), parameter_count(net))


def _peak_bytes(fn: Callable[[], object]) -> int:
    tracemalloc.start()
    try:
        fn()
        return tracemalloc.get_traced_memory()[1]
    finally:
        tracemalloc.stop()


def bench_one(
    net: Network | Benchable, batch: int, cfg: BenchConfig = BenchConfig(), clock: Callable[[], float] = time.perf_counter
) -> BenchRow:
    target = as_benchable(net)
    rng = np.random.default_rng(cfg.seed)
    planes = (rng.random((batch, NUM_PLANES, GRID, GRID)) < 0.3).astype(np.float32)
    for _ in range(cfg.warmup):
        target.predict(planes)
    means = []
    for _ in range(cfg.runs):
        t0 = clock()
        for _ in range(cfg.calls):
            target.predict(planes)
        means.append((clock() - t0) / cfg.calls)
    latency = statistics.median(means)
    peak = _peak_bytes(lambda: target.predict(planes)) if cfg.memory else None
    return BenchRow(target.name, batch, target.params, latency, batch / latency, peak, means)


def benchmark(
    nets: Sequence[Network | Benchable], batch_sizes: Sequence[int], cfg: BenchConfig = BenchConfig()
) -> BenchReport:
    report = BenchReport(config=cfg)
    for net in nets:
        for batch in batch_sizes:
            report.rows.append(bench_one(net, batch, cfg))
    return report
