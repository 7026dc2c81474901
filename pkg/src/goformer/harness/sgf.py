"""SGF game records (SZ, KM, RE, B, W) and conversion to training samples."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

from sgfmill import sgf

from goformer.features import TrainingSample, encode, policy_index
from goformer.goboard import PASS, Color, GameState, IllegalMoveError, Move, chinese_score

log = logging.getLogger(__name__)


@dataclass
class GameRecord:
    size: int
    komi: float
    moves: list[Move] = field(default_factory=list)
    result: str = ""

    @property
    def winner(self) -> Color | None:
        if self.result[:2] in ("B+", "W+"):
            return Color.BLACK if self.result[0] == "B" else Color.WHITE
        return None

    def replay(self) -> list[GameState]:
        """Every position of the game, the initial empty board first."""
        state = GameState.new(self.size, self.komi)
        states = [state]
        for move in self.moves:
            state = state.play(move)
            states.append(state)
        return states


def result_string(state: GameState) -> str:
    b, w, winner = chinese_score(state)
    margin = abs(b - w)
    return f"{'B' if winner == Color.BLACK else 'W'}+{margin:g}"


def position_samples(states: Sequence[GameState], moves: Sequence[Move], white_won: float) -> list[TrainingSample]:
    """One sample per move: planes of the position before it, the move, the outcome."""
    out = []
    for i, move in enumerate(moves):
        history = (states[i - 1] if i >= 1 else None, states[i - 2] if i >= 2 else None)
        planes = encode(states[i], history)
        out.append(TrainingSample(planes, policy_index(move, states[i].size), white_won))
    return out


def game_samples(record: GameRecord) -> list[TrainingSample]:
    winner = record.winner
    if winner is None:
        raise ValueError(f"no decisive result in {record.result!r}")
    return position_samples(record.replay(), record.moves, 1.0 if winner == Color.WHITE else 0.0)


def to_sgf(record: GameRecord) -> bytes:
    game = sgf.Sgf_game(size=record.size)
    root = game.get_root()
    root.set("KM", record.komi)
    if record.result:
        root.set("RE", record.result)
    color = "b"
    for move in record.moves:
        node = game.extend_main_sequence()
        # sgfmill counts rows from the bottom edge
        node.set_move(color, None if move.point is None else (record.size - 1 - move.point.row, move.point.col))
        color = "w" if color == "b" else "b"
    return game.serialise()


def from_sgf(data: bytes) -> GameRecord:
    game = sgf.Sgf_game.from_bytes(data)
    size = game.get_size()
    root = game.get_root()
    komi = game.get_komi()
    result = root.get("RE") if root.has_property("RE") else ""
    moves = []
    for node in game.get_main_sequence()[1:]:
        color, point = node.get_move()
        if color is None:
            continue
        moves.append(PASS if point is None else Move.play(size - 1 - point[0], point[1]))
    return GameRecord(size, komi, moves, result)


def write_sgf(path: str | Path, record: GameRecord) -> None:
    Path(path).write_bytes(to_sgf(record))


def read_sgf(path: str | Path) -> GameRecord:
    return from_sgf(Path(path).read_bytes())


def ingest_sgf(paths: Iterable[str | Path]) -> list[TrainingSample]:
    """Replay each file and emit one sample per recorded move.

    Files that fail to parse, lack a result, or contain an illegal move are
    skipped with a log message.
    """
    samples: list[TrainingSample] = []
    for path in paths:
        try:
            record = read_sgf(path)
        except (ValueError, OSError) as exc:
            log.warning("skipping %s: unreadable SGF (%s)", path, exc)
            continue
        if record.winner is None:
            log.warning("skipping %s: no usable result %r", path, record.result)
            continue
        try:
            samples.extend(game_samples(record))
        except IllegalMoveError as exc:
            log.warning("skipping %s: illegal move %s (%s)", path, exc.move, exc.reason.name)
        except ValueError as exc:
            log.warning("skipping %s: %s", path, exc)
    return samples
