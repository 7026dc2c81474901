"""Head-to-head matches and self-play data generation."""

from __future__ import annotations

import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from goformer.features import TrainingSample
from goformer.goboard import Color, GameState, chinese_score
from goformer.harness.records import write_records
from goformer.harness.sgf import GameRecord, position_samples, result_string, write_sgf
from goformer.models.network import Network
from goformer.search import Evaluator, SearchConfig, Searcher

log = logging.getLogger(__name__)

FORFEIT_FACTOR = 10.0


@dataclass(frozen=True)
class MatchConfig:
    games: int = 100
    playouts: int | None = 64
    seconds: float | None = None
    randomized_plies: int = 6
    komi: float = 7.5
    size: int = 19
    max_moves: int | None = None
    eval_batch: int = 8
    seed: int = 0
    workers: int = 1

    def __post_init__(self):
        if self.workers < 1:
            raise ValueError("workers must be >= 1")
        if self.games < 2 or self.games % 2:
            raise ValueError("games must be a positive even number (colour balance)")
        if self.playouts is None and self.seconds is None:
            raise ValueError("need a playout or time budget")

    @property
    def move_cap(self) -> int:
        return self.max_moves if self.max_moves is not None else 2 * self.size * self.size

    def search_config(self, seed: int) -> SearchConfig:
        return SearchConfig(
            playouts=self.playouts, seconds=self.seconds, random_plies=self.randomized_plies,
            eval_batch=self.eval_batch, seed=seed,
        )  # fmt: skip


@dataclass
class PlayedGame:
    record: GameRecord
    states: list[GameState]
    winner: Color
    forfeit: Color | None = None
    capped: bool = False


@dataclass
class MatchResult:
    wins_a: int
    games: int
    a_as_black: int
    records: list[PlayedGame] = field(default_factory=list)

    @property
    def winrate_a(self) -> float:
        return self.wins_a / self.games


def play_game(
    black: Searcher, white: Searcher, size: int, komi: float, max_moves: int, budget_seconds: float | None = None
) -> PlayedGame:
    """Play to two passes or ``max_moves``, then score the final position as it stands."""
    state = GameState.new(size, komi)
    states = [state]
    moves = []
    engines = [black] if black is white else [black, white]
    for e in engines:
        e.reset()
    forfeit = None
    while not state.game_over and len(moves) < max_moves:
        engine = black if state.to_play == Color.BLACK else white
        history = (states[-2] if len(states) >= 2 else None, states[-3] if len(states) >= 3 else None)
        t0 = time.perf_counter()
        result = engine.search(state, history)
        spent = time.perf_counter() - t0
        if budget_seconds is not None and spent > FORFEIT_FACTOR * budget_seconds:
            forfeit = state.to_play
            log.warning("forfeit: %s spent %.2fs on a %.2fs budget", forfeit.name, spent, budget_seconds)
            break
        state = state.play(result.move)
        for e in engines:
            e.advance(result.move)
        moves.append(result.move)
        states.append(state)
    if forfeit is not None:
        winner = forfeit.opponent()
        result_text = f"{'B' if winner == Color.BLACK else 'W'}+F"
    else:
        winner = chinese_score(state)[2]
        result_text = result_string(state)
    record = GameRecord(size, komi, moves, result_text)
    return PlayedGame(record, states, winner, forfeit, capped=not state.game_over and forfeit is None)


def _match_game(a, b, cfg: MatchConfig, g: int) -> PlayedGame:
    sa = Searcher(a, cfg.search_config(cfg.seed + 2 * g))
    sb = Searcher(b, cfg.search_config(cfg.seed + 2 * g + 1))
    black, white = (sa, sb) if g % 2 == 0 else (sb, sa)
    return play_game(black, white, cfg.size, cfg.komi, cfg.move_cap, cfg.seconds)


def _run_games(fn, args: list[tuple], workers: int) -> list:
    """Apply ``fn`` to each argument tuple, in worker processes when ``workers`` > 1."""
    if workers == 1:
        return [fn(*a) for a in args]
    with ProcessPoolExecutor(workers) as pool:
        return list(pool.map(fn, *zip(*args)))


def play_match(a: Network | Evaluator, b: Network | Evaluator, cfg: MatchConfig, sgf_dir: str | Path | None = None) -> MatchResult:
    """``cfg.games`` games with colours alternating; A is Black in even-numbered games.

    Game ``g`` seeds its searchers from ``cfg.seed + 2g`` and ``cfg.seed + 2g + 1``,
    so results do not depend on ``cfg.workers``.
    """
    if sgf_dir:
        Path(sgf_dir).mkdir(parents=True, exist_ok=True)
    games = _run_games(_match_game, [(a, b, cfg, g) for g in range(cfg.games)], cfg.workers)
    out = MatchResult(0, cfg.games, 0)
    for g, game in enumerate(games):
        a_black = g % 2 == 0
        a_color = Color.BLACK if a_black else Color.WHITE
        out.a_as_black += a_black
        out.wins_a += game.winner == a_color
        out.records.append(game)
        if sgf_dir:
            write_sgf(Path(sgf_dir) / f"game_{g:04d}.sgf", game.record)
        log.info("game %d: A as %s, %s (%d moves)", g, a_color.name, game.record.result, len(game.record.moves))
    return out


@dataclass(frozen=True)
class SelfPlayConfig:
    playouts: int = 16
    randomized_plies: int = 6
    komi: float = 7.5
    size: int = 19
    max_moves: int | None = None
    eval_batch: int = 8
    seed: int = 0
    workers: int = 1


def _selfplay_game(engine, cfg: SelfPlayConfig, g: int) -> PlayedGame:
    cap = cfg.max_moves if cfg.max_moves is not None else 2 * cfg.size * cfg.size
    scfg = SearchConfig(playouts=cfg.playouts, random_plies=cfg.randomized_plies, eval_batch=cfg.eval_batch, seed=cfg.seed + g)
    s = Searcher(engine, scfg)
    return play_game(s, s, cfg.size, cfg.komi, cap)


def generate_selfplay(
    engine: Network | Evaluator, games: int, cfg: SelfPlayConfig = SelfPlayConfig(), out_dir: str | Path | None = None
) -> tuple[list[TrainingSample], list[GameRecord]]:
    """Self-play ``games`` games; one sample per move with the final result as value.

    With ``out_dir`` set, writes ``selfplay.gotr`` and one SGF per game.
    """
    samples: list[TrainingSample] = []
    records: list[GameRecord] = []
    for game in _run_games(_selfplay_game, [(engine, cfg, g) for g in range(games)], cfg.workers):
        white_won = 1.0 if game.winner == Color.WHITE else 0.0
        samples.extend(position_samples(game.states, game.record.moves, white_won))
        records.append(game.record)
    if out_dir:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        write_records(out / "selfplay.gotr", samples)
        for g, record in enumerate(records):
            write_sgf(out / f"selfplay_{g:04d}.sgf", record)
    return samples, records
