"""Training, evaluation, matches, self-play, benchmarks and record formats."""

from goformer.harness.bench import BenchConfig, BenchReport, BenchRow, Benchable, bench_one, benchmark
from goformer.harness.match import (
    MatchConfig,
    MatchResult,
    PlayedGame,
    SelfPlayConfig,
    generate_selfplay,
    play_game,
    play_match,
)
from goformer.harness.records import RecordSet, read_records, write_records
from goformer.harness.reports import aligned, to_csv, write_report
from goformer.harness.sgf import GameRecord, from_sgf, game_samples, ingest_sgf, read_sgf, to_sgf, write_sgf
from goformer.harness.training import (
    MetricsReport,
    TrainingConfig,
    TrainingDiverged,
    combined_loss,
    evaluate,
    train,
    train_step,
)

__all__ = [
    "BenchConfig",
    "BenchReport",
    "BenchRow",
    "Benchable",
    "GameRecord",
    "MatchConfig",
    "MatchResult",
    "MetricsReport",
    "PlayedGame",
    "RecordSet",
    "SelfPlayConfig",
    "TrainingConfig",
    "TrainingDiverged",
    "aligned",
    "bench_one",
    "benchmark",
    "combined_loss",
    "evaluate",
    "from_sgf",
    "game_samples",
    "generate_selfplay",
    "ingest_sgf",
    "play_game",
    "play_match",
    "read_records",
    "read_sgf",
    "to_csv",
    "to_sgf",
    "train",
    "train_step",
    "write_records",
    "write_report",
    "write_sgf",
]
