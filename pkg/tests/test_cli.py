import argparse
import io
import random
import sys

import pytest

from goformer.cli import main, parse_budget
from goformer.harness import GameRecord, read_records, write_sgf
from goformer.models import build_network

from oracles import random_game


def test_parse_budget():
    assert parse_budget("64") == (64, None)
    assert parse_budget("2.5s") == (None, 2.5)
    assert parse_budget("0.5") == (None, 0.5)
    for bad in ("0", "-1s", "fast"):
        with pytest.raises(argparse.ArgumentTypeError):
            parse_budget(bad)


def _sgf_dir(path):
    path.mkdir()
    rng = random.Random(0)
    for g in range(2):
        states = random_game(9, 12, rng)
        moves = [s.history[-1][0] for s in states[1:]]
        write_sgf(path / f"g{g}.sgf", GameRecord(9, 7.5, moves, "W+3.5"))
    return path


def test_encode_train_bench_match(tmp_path, capsys):
    src = _sgf_dir(tmp_path / "sgf")
    assert main(["encode", "--sgf", str(src), "--out", str(tmp_path / "d.gotr")]) == 0
    assert len(read_records(tmp_path / "d.gotr")) == 24

    ckpt = tmp_path / "net.gowt"
    args = ["train", "--arch", "res:1x4", "--data", str(tmp_path / "d.gotr"), "--epochs", "1",
            "--states-per-epoch", "8", "--batch", "8", "--holdout", "0", "--out", str(ckpt),
            "--report", str(tmp_path / "train")]  # fmt: skip
    assert main(args) == 0
    assert (tmp_path / "train.txt").exists() and (tmp_path / "train.csv").exists()
    assert "Residual(1,4)" in (tmp_path / "train.txt").read_text()

    args = ["bench", "--arch", "res:1x4", "--batch", "2", "--warmup", "0", "--calls", "1", "--runs", "1",
            "--report", str(tmp_path / "bench")]  # fmt: skip
    assert main(args) == 0
    assert "Evaluations per second" in capsys.readouterr().out

    args = ["match", "--a", str(ckpt), "--b", str(ckpt), "--games", "2", "--budget", "4", "--size", "5",
            "--max-moves", "10", "--report", str(tmp_path / "match")]  # fmt: skip
    assert main(args) == 0
    assert "Winrate A" in (tmp_path / "match.txt").read_text()


def test_gtp_subcommand(tmp_path, monkeypatch, capsys):
    ckpt = tmp_path / "net.gowt"
    build_network("res:1x4").save(ckpt)
    monkeypatch.setattr(sys, "stdin", io.StringIO("1 boardsize 5\n2 genmove b\n3 quit\n"))
    assert main(["gtp", "--ckpt", str(ckpt), "--budget", "4"]) == 0
    out = capsys.readouterr().out
    assert out.startswith("=1 \n\n=2 ") and out.endswith("=3 \n\n")


def test_bad_arguments_exit():
    with pytest.raises(SystemExit):
        main(["bench", "--arch", "res:1x4", "--batch", "a,b"])
    with pytest.raises(SystemExit):
        main([])
