import csv
import io
import random

import numpy as np
import pytest

from goformer.features import PASS_INDEX, TrainingSample, encode
from goformer.goboard import PASS, Color, GameState, Move, chinese_score
from goformer.harness import (
    BenchConfig,
    Benchable,
    GameRecord,
    MatchConfig,
    RecordSet,
    SelfPlayConfig,
    TrainingConfig,
    aligned,
    bench_one,
    benchmark,
    evaluate,
    from_sgf,
    game_samples,
    generate_selfplay,
    ingest_sgf,
    play_match,
    read_records,
    read_sgf,
    to_sgf,
    train,
    write_records,
    write_report,
    write_sgf,
)
from goformer.models import build_network
from goformer.search import UniformEvaluator

from oracles import random_game


def samples(n, seed=0):
    rng = np.random.default_rng(seed)
    out = []
    for i in range(n):
        planes = (rng.random((31, 19, 19)) < 0.3).astype(np.float32)
        policy = PASS_INDEX if i % 7 == 6 else int(rng.integers(0, 361))
        out.append(TrainingSample(planes, policy, float(rng.random())))
    return out


def record_of(seed=0, size=9, moves=30):
    rng = random.Random(seed)
    states = random_game(size, moves, rng, komi=6.5, pass_prob=0.05)
    played = [s.history[-1][0] for s in states[1:]]
    b, w, winner = chinese_score(states[-1])
    return GameRecord(size, 6.5, played, f"{'B' if winner == Color.BLACK else 'W'}+{abs(b - w):g}")


# -- GOTR records -----------------------------------------------------------


def test_gotr_round_trip_is_bit_exact(tmp_path):
    data = samples(9)
    assert write_records(tmp_path / "r.gotr", data) == 9
    back = read_records(tmp_path / "r.gotr")
    assert len(back) == 9
    ref = RecordSet.from_samples(data)
    assert back.planes.tobytes() == ref.planes.tobytes()
    assert np.array_equal(back.policy, ref.policy)
    assert back.value.tobytes() == ref.value.tobytes()
    write_records(tmp_path / "again.gotr", back)
    assert (tmp_path / "again.gotr").read_bytes() == (tmp_path / "r.gotr").read_bytes()


def test_gotr_layout(tmp_path):
    write_records(tmp_path / "r.gotr", samples(2))
    raw = (tmp_path / "r.gotr").read_bytes()
    assert raw[:4] == b"GOTR"
    assert int.from_bytes(raw[4:8], "little") == 1
    assert int.from_bytes(raw[8:16], "little") == 2
    assert len(raw) == 16 + 2 * (31 * 361 * 4 + 2 + 4)


def test_gotr_rejects_bad_files(tmp_path):
    write_records(tmp_path / "r.gotr", samples(3))
    raw = (tmp_path / "r.gotr").read_bytes()
    (tmp_path / "short.gotr").write_bytes(raw[:-1])
    (tmp_path / "magic.gotr").write_bytes(b"XXXX" + raw[4:])
    for name in ("short.gotr", "magic.gotr"):
        with pytest.raises(ValueError):
            read_records(tmp_path / name)
    with pytest.raises(ValueError):
        write_records(tmp_path / "bad.gotr", [TrainingSample(np.zeros((31, 19, 19), np.float32), 362, 0.0)])


def test_empty_record_file(tmp_path):
    assert write_records(tmp_path / "e.gotr", []) == 0
    assert len(read_records(tmp_path / "e.gotr")) == 0


# -- SGF --------------------------------------------------------------------


def test_sgf_round_trip(tmp_path):
    record = record_of(1)
    write_sgf(tmp_path / "g.sgf", record)
    back = read_sgf(tmp_path / "g.sgf")
    assert (back.size, back.komi, back.moves, back.result) == (record.size, record.komi, record.moves, record.result)


def test_sgf_coordinates_count_rows_from_top():
    record = GameRecord(9, 7.5, [Move.play(0, 0), Move.play(8, 2), PASS], "W+1")
    text = to_sgf(record)
    # sgfmill writes a pass as tt on boards up to 19x19
    assert b";B[aa]" in text and b";W[ci]" in text and b";B[tt]" in text
    assert from_sgf(text).moves == record.moves


def test_game_samples_follow_replay():
    record = record_of(2)
    out = game_samples(record)
    states = record.replay()
    assert len(out) == len(record.moves)
    white_won = 1.0 if record.winner == Color.WHITE else 0.0
    for i, s in enumerate(out):
        history = (states[i - 1] if i >= 1 else None, states[i - 2] if i >= 2 else None)
        assert np.array_equal(s.planes, encode(states[i], history))
        assert s.value_target == white_won


def test_ingest_skips_bad_files(tmp_path, caplog):
    write_sgf(tmp_path / "good.sgf", record_of(3))
    (tmp_path / "junk.sgf").write_bytes(b"not an sgf")
    write_sgf(tmp_path / "noresult.sgf", GameRecord(9, 7.5, [Move.play(1, 1)], ""))
    write_sgf(tmp_path / "illegal.sgf", GameRecord(9, 7.5, [Move.play(1, 1), Move.play(1, 1)], "B+1"))
    paths = sorted(tmp_path.glob("*.sgf"))
    out = ingest_sgf(paths)
    assert len(out) == len(record_of(3).moves)
    assert caplog.text.count("skipping") == 3


# -- training and evaluation ------------------------------------------------


def test_evaluate_with_stub_predictor():
    data = RecordSet.from_samples(
        [
            TrainingSample(np.zeros((31, 19, 19), np.float32), 5, 1.0),
            TrainingSample(np.zeros((31, 19, 19), np.float32), 7, 0.0),
            TrainingSample(np.zeros((31, 19, 19), np.float32), PASS_INDEX, 1.0),
        ]
    )

    def stub(planes):
        logits = np.zeros((len(planes), 361))
        logits[:, 5] = 1.0
        return logits, np.full(len(planes), 0.5)

    report = evaluate(stub, data, batch_size=2)
    assert report.accuracy == 0.5  # the pass target is not counted
    assert report.mse == pytest.approx(0.25)
    assert report.mae == pytest.approx(0.5)
    assert report.count == 3


def test_zero_learning_rate_leaves_parameters():
    net = build_network("res:1x4", seed=1)
    before = {n: p.data.copy() for n, p in net.named_parameters()}
    cfg = TrainingConfig(epochs=1, states_per_epoch=16, batch_size=8, eta0=0.0, holdout=0.0)
    train(net, samples(8), cfg)
    assert all(np.array_equal(before[n], p.data) for n, p in net.named_parameters())


def test_training_reduces_loss_and_checkpoints(tmp_path):
    net = build_network("res:1x8", seed=0)
    cfg = TrainingConfig(epochs=3, states_per_epoch=64, batch_size=16, eta0=2e-3, holdout=0.0, checkpoint_dir=str(tmp_path))
    _, report = train(net, samples(16), cfg)
    assert report.epoch_loss[-1] < report.epoch_loss[0]
    assert len(report.step_loss) == cfg.total_steps == 12
    assert sorted(p.name for p in tmp_path.iterdir()) == ["epoch_001.gowt", "epoch_002.gowt", "epoch_003.gowt"]


def test_training_early_stop_hook():
    net = build_network("res:1x4")
    cfg = TrainingConfig(epochs=5, states_per_epoch=8, batch_size=8, holdout=0.0)
    _, report = train(net, samples(8), cfg, on_epoch=lambda epoch, rep: epoch == 2)
    assert len(report.epoch_loss) == 2


def test_training_config_validation():
    with pytest.raises(ValueError):
        TrainingConfig(eta0=1e-3, eta_min=1e-2)
    with pytest.raises(ValueError):
        TrainingConfig(holdout=1.0)
    with pytest.raises(ValueError):
        train(build_network("res:1x4"), [TrainingSample(np.zeros((31, 19, 19), np.float32), PASS_INDEX, 0.0)], TrainingConfig())


# -- matches and self-play ----------------------------------------------------


def small_match(**kw):
    base = dict(games=4, playouts=8, randomized_plies=4, komi=0.5, size=5, max_moves=30, seed=3)
    base.update(kw)
    return MatchConfig(**base)


def test_match_colour_balance_and_scoring(tmp_path):
    ev = UniformEvaluator()
    result = play_match(ev, ev, small_match(), tmp_path)
    assert result.a_as_black == 2 and result.games == 4
    assert 0 <= result.wins_a <= 4
    assert len(list(tmp_path.glob("*.sgf"))) == 4
    for g, game in enumerate(result.records):
        final = game.states[-1]
        assert game.winner == chinese_score(final)[2]
        assert len(game.record.moves) <= 30
        assert game.capped == (not final.game_over)


def test_match_results_do_not_depend_on_workers():
    ev = UniformEvaluator()
    one = play_match(ev, ev, small_match(workers=1))
    two = play_match(ev, ev, small_match(workers=2))
    assert [g.record.moves for g in one.records] == [g.record.moves for g in two.records]
    assert one.wins_a == two.wins_a


def test_match_config_validation():
    with pytest.raises(ValueError):
        small_match(games=3)
    with pytest.raises(ValueError):
        small_match(playouts=None)
    with pytest.raises(ValueError):
        small_match(workers=0)


def test_selfplay_writes_records_and_sgf(tmp_path):
    cfg = SelfPlayConfig(playouts=8, randomized_plies=4, size=5, komi=0.5, max_moves=20, seed=1)
    data, records = generate_selfplay(UniformEvaluator(), 2, cfg, tmp_path)
    assert len(data) == sum(len(r.moves) for r in records)
    back = read_records(tmp_path / "selfplay.gotr")
    assert back.planes.tobytes() == RecordSet.from_samples(data).planes.tobytes()
    assert len(list(tmp_path.glob("selfplay_*.sgf"))) == 2


# -- benchmark and reports ----------------------------------------------------


class FakeClock:
    def __init__(self):
        self.t = 0.0

    def __call__(self):
        return self.t


def test_bench_protocol_call_counts_and_median():
    clock = FakeClock()
    run_costs = [5, 1, 3, 2, 4, 7, 6]  # seconds per call in each timed run
    calls = []

    def predict(x):
        k = len(calls)
        calls.append(x.shape)
        if k >= 100:
            clock.t += run_costs[(k - 100) // 100]

    cfg = BenchConfig(warmup=100, calls=100, runs=7, memory=False)
    row = bench_one(Benchable("stub", predict, 10), 32, cfg, clock=clock)
    assert len(calls) == 100 + 7 * 100
    assert all(shape == (32, 31, 19, 19) for shape in calls)
    assert row.run_means == run_costs
    assert row.latency == 4
    assert row.evals_per_sec == 8
    assert row.peak_memory is None


def test_bench_real_network_row():
    net = build_network("res:1x4")
    row = bench_one(net, 4, BenchConfig(warmup=1, calls=2, runs=3))
    assert row.network == "Residual(1,4)" and row.params == sum(p.data.size for p in net.parameters())
    assert row.evals_per_sec == pytest.approx(4 / row.latency, rel=1e-12)
    assert row.peak_memory > 0
    assert len(row.run_means) == 3


def test_bench_report_files(tmp_path):
    stub = Benchable("stub", lambda x: None, 3)
    report = benchmark([stub], [2, 4], BenchConfig(warmup=0, calls=1, runs=1, memory=False))
    txt, csv_path = report.write(tmp_path / "bench")
    lines = txt.read_text().splitlines()
    assert lines[0].split("  ")[0].strip() == "Network" and "Peak Memory" in lines[0]
    rows = list(csv.reader(io.StringIO(csv_path.read_text())))
    assert rows[0] == ["Network", "Batch", "Parameters", "Latency", "Evaluations per second", "Peak Memory"]
    assert [r[1] for r in rows[1:]] == ["2", "4"]


def test_aligned_table():
    text = aligned(("Name", "N"), [("a", 1), ("long", 100)])
    assert text.splitlines() == ["Name    N", "---------", "a       1", "long  100"]


def test_write_report_strips_suffix(tmp_path):
    txt, csv_path = write_report(tmp_path / "out.csv", ("A",), [("x",)], [("x",)])
    assert txt.name == "out.txt" and csv_path.name == "out.csv"
