"""Command line: train, bench, match, selfplay, encode and gtp."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from goformer.harness.reports import write_report

log = logging.getLogger("goformer")

TRAIN_COLUMNS = ("Network", "Learning Rate", "Batch", "Accuracy", "MSE", "MAE")
MATCH_COLUMNS = ("Network A", "Network B", "Games", "A as Black", "Wins A", "Winrate A")


def _ints(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def parse_budget(text: str) -> tuple[int | None, float | None]:
    """``64`` means 64 playouts; ``2.5s`` (or any non-integer) means seconds per move."""
    t = text.strip().lower()
    try:
        if t.endswith("s"):
            seconds = float(t[:-1])
        elif t.isdigit():
            playouts = int(t)
            if playouts < 1:
                raise ValueError
            return playouts, None
        else:
            seconds = float(t)
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad budget {text!r}: use a playout count or seconds like 2.5s") from None
    if seconds <= 0:
        raise argparse.ArgumentTypeError("budget must be positive")
    return None, seconds


def _load_dataset(path: Path):
    from goformer.harness import ingest_sgf, read_records

    if path.is_dir():
        return ingest_sgf(sorted(path.glob("*.sgf")))
    if path.suffix.lower() == ".sgf":
        return ingest_sgf([path])
    return read_records(path)


def cmd_train(args) -> int:
    from goformer.harness import TrainingConfig, train
    from goformer.models import build_network

    data = _load_dataset(Path(args.data))
    net = build_network(args.arch, seed=args.seed)
    cfg = TrainingConfig(
        epochs=args.epochs, states_per_epoch=args.states_per_epoch, batch_size=args.batch, eta0=args.lr,
        eta_min=args.lr_min, seed=args.seed, holdout=args.holdout, checkpoint_dir=args.checkpoint_dir,
    )  # fmt: skip
    net, report = train(net, data, cfg)
    net.save(args.out)
    row = [net.display_name, f"{args.lr:g}", args.batch, f"{100 * report.accuracy:.2f}%", f"{report.mse:.4f}", f"{report.mae:.4f}"]
    print(f"saved {args.out}; {report.row()}")
    if args.report:
        raw = [net.display_name, args.lr, args.batch, report.accuracy, report.mse, report.mae]
        for p in write_report(args.report, TRAIN_COLUMNS, [row], [raw]):
            print(f"wrote {p}")
    return 0


def cmd_bench(args) -> int:
    from goformer.harness import BenchConfig, benchmark
    from goformer.models import build_network

    nets = [build_network(a.strip(), seed=args.seed) for a in args.arch.split(",") if a.strip()]
    cfg = BenchConfig(warmup=args.warmup, calls=args.calls, runs=args.runs, memory=not args.no_memory, seed=args.seed)
    report = benchmark(nets, args.batch, cfg)
    sys.stdout.write(report.text())
    if args.report:
        for p in report.write(args.report):
            print(f"wrote {p}")
    return 0


def cmd_match(args) -> int:
    from goformer.harness import MatchConfig, play_match
    from goformer.models import load_network

    a, b = load_network(args.a), load_network(args.b)
    playouts, seconds = args.budget
    cfg = MatchConfig(
        games=args.games, playouts=playouts, seconds=seconds, randomized_plies=args.randomized_plies, komi=args.komi,
        size=args.size, max_moves=args.max_moves, seed=args.seed, workers=args.workers,
    )  # fmt: skip
    result = play_match(a, b, cfg, args.sgf_dir)
    row = [a.display_name, b.display_name, result.games, result.a_as_black, result.wins_a, f"{100 * result.winrate_a:.1f}%"]
    print(f"A wins {result.wins_a}/{result.games} ({100 * result.winrate_a:.1f}%)")
    if args.report:
        raw = row[:5] + [result.winrate_a]
        for p in write_report(args.report, MATCH_COLUMNS, [row], [raw]):
            print(f"wrote {p}")
    return 0


def cmd_selfplay(args) -> int:
    from goformer.harness import SelfPlayConfig, generate_selfplay
    from goformer.models import load_network

    net = load_network(args.ckpt)
    cfg = SelfPlayConfig(
        playouts=args.playouts, randomized_plies=args.randomized_plies, komi=args.komi, size=args.size,
        max_moves=args.max_moves, seed=args.seed, workers=args.workers,
    )  # fmt: skip
    samples, records = generate_selfplay(net, args.games, cfg, args.out)
    print(f"{len(records)} games, {len(samples)} samples written to {args.out}")
    return 0


def cmd_encode(args) -> int:
    from goformer.harness import ingest_sgf, write_records

    src = Path(args.sgf)
    paths = sorted(src.glob("*.sgf")) if src.is_dir() else [src]
    samples = ingest_sgf(paths)
    n = write_records(args.out, samples)
    print(f"{n} samples from {len(paths)} files written to {args.out}")
    return 0


def cmd_gtp(args) -> int:
    from goformer.gtp import GtpSession, run_gtp
    from goformer.models import load_network
    from goformer.search import SearchConfig

    playouts, seconds = args.budget
    cfg = SearchConfig(playouts=playouts, seconds=seconds, seed=args.seed)
    run_gtp(GtpSession(load_network(args.ckpt), cfg, size=args.size, komi=args.komi))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="goformer", description="Go policy/value networks, search and harnesses.")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train a network on GOTR records or SGF files")
    p.add_argument("--arch", required=True, help="res:BxP, eff:l1 ... or eff:[w0,w1]x[d0,d1]:mb3d=n:heads=h")
    p.add_argument("--data", required=True, help="GOTR file, SGF file or directory of SGF files")
    p.add_argument("--epochs", type=int, default=20)
    p.add_argument("--states-per-epoch", type=int, default=10_000)
    p.add_argument("--batch", type=int, default=64)
    p.add_argument("--lr", type=float, default=2e-3)
    p.add_argument("--lr-min", type=float, default=0.0)
    p.add_argument("--holdout", type=float, default=0.1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--checkpoint-dir", default=None, help="save a checkpoint after every epoch")
    p.add_argument("--out", required=True, help="final checkpoint path")
    p.add_argument("--report", default=None, help="write <report>.txt and <report>.csv")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("bench", help="inference latency and throughput")
    p.add_argument("--arch", required=True, help="comma-separated architecture descriptors")
    p.add_argument("--batch", type=_ints, default=[32, 64, 128, 256, 512, 1024])
    p.add_argument("--warmup", type=int, default=100)
    p.add_argument("--calls", type=int, default=100)
    p.add_argument("--runs", type=int, default=7)
    p.add_argument("--no-memory", action="store_true", help="skip the peak-memory pass")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--report", default=None)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("match", help="play checkpoint A against checkpoint B")
    p.add_argument("--a", required=True)
    p.add_argument("--b", required=True)
    p.add_argument("--games", type=int, default=100)
    p.add_argument("--budget", type=parse_budget, default=(64, None), help="playouts (64) or seconds (2.5s) per move")
    p.add_argument("--komi", type=float, default=7.5)
    p.add_argument("--size", type=int, default=19)
    p.add_argument("--randomized-plies", type=int, default=6)
    p.add_argument("--max-moves", type=int, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--sgf-dir", default=None)
    p.add_argument("--report", default=None)
    p.set_defaults(func=cmd_match)

    p = sub.add_parser("selfplay", help="generate GOTR records and SGF by self-play")
    p.add_argument("--ckpt", required=True)
    p.add_argument("--games", type=int, default=1)
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--playouts", type=int, default=16)
    p.add_argument("--randomized-plies", type=int, default=6)
    p.add_argument("--komi", type=float, default=7.5)
    p.add_argument("--size", type=int, default=19)
    p.add_argument("--max-moves", type=int, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_selfplay)

    p = sub.add_parser("encode", help="convert SGF files to GOTR records")
    p.add_argument("--sgf", required=True, help="SGF file or directory")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_encode)

    p = sub.add_parser("gtp", help="serve GTP on stdin/stdout")
    p.add_argument("--ckpt", required=True)
    p.add_argument("--budget", type=parse_budget, default=(200, None))
    p.add_argument("--size", type=int, default=19)
    p.add_argument("--komi", type=float, default=7.5)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_gtp)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, stream=sys.stderr, format="%(message)s")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
