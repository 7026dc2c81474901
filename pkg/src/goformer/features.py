"""31-plane network input and training targets.

Boards smaller than 19x19 are embedded in the top-left corner of the
19x19 grid; plane 30 marks on-board points so the network can tell them
apart. On a full 19x19 board plane 30 is all ones.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import NamedTuple, Sequence

import numpy as np

from goformer.goboard import Analysis, Color, GameState, IllegalReason, Move, analyze
from goformer.goboard.ladder import LadderStatus, ladder_features

GRID = 19
NUM_PLANES = 31
POLICY_SIZE = GRID * GRID
PASS_INDEX = POLICY_SIZE
LAYOUT_VERSION = 1
KOMI_SCALE = 15.0


class PlaneSpec(NamedTuple):
    name: str
    semantics: str


LAYOUT_V1: tuple[PlaneSpec, ...] = (
    PlaneSpec("black_t0", "black stones now"),
    PlaneSpec("white_t0", "white stones now"),
    PlaneSpec("black_t1", "black stones one move ago"),
    PlaneSpec("white_t1", "white stones one move ago"),
    PlaneSpec("black_t2", "black stones two moves ago"),
    PlaneSpec("white_t2", "white stones two moves ago"),
    PlaneSpec("black_to_play", "1 everywhere iff Black is to play"),
    PlaneSpec("black_libs_1", "black chains with 1 liberty"),
    PlaneSpec("black_libs_2", "black chains with 2 liberties"),
    PlaneSpec("black_libs_3", "black chains with 3 liberties"),
    PlaneSpec("black_libs_4p", "black chains with 4+ liberties"),
    PlaneSpec("white_libs_1", "white chains with 1 liberty"),
    PlaneSpec("white_libs_2", "white chains with 2 liberties"),
    PlaneSpec("white_libs_3", "white chains with 3 liberties"),
    PlaneSpec("white_libs_4p", "white chains with 4+ liberties"),
    PlaneSpec("libs_after_1", "legal point; mover's chain has 1 liberty after playing"),
    PlaneSpec("libs_after_2", "legal point; 2 liberties after playing"),
    PlaneSpec("libs_after_3", "legal point; 3 liberties after playing"),
    PlaneSpec("libs_after_4p", "legal point; 4+ liberties after playing"),
    PlaneSpec("opp_laddered", "opponent stones capturable by ladder"),
    PlaneSpec("own_laddered", "own stones capturable by ladder"),
    PlaneSpec("ladder_capture_move", "moves starting a working ladder on a 2-liberty opponent chain"),
    PlaneSpec("ladder_escape_move", "moves saving an own chain from a ladder"),
    PlaneSpec("legal", "legal moves for the side to play"),
    PlaneSpec("ko_illegal", "empty points illegal only because of superko"),
    PlaneSpec("capture_1", "legal point capturing 1 stone"),
    PlaneSpec("capture_2", "legal point capturing 2 stones"),
    PlaneSpec("capture_3", "legal point capturing 3 stones"),
    PlaneSpec("capture_4p", "legal point capturing 4+ stones"),
    PlaneSpec("komi", "komi / 15 from White's side, clamped to [-1, 1]"),
    PlaneSpec("on_board", "1 on board points"),
)
assert len(LAYOUT_V1) == NUM_PLANES


class TrainingSample(NamedTuple):
    planes: np.ndarray
    policy_target: int
    value_target: float


def _bucket(n: int) -> int:
    return min(n, 4) - 1


def policy_index(move: Move, size: int) -> int:
    """Index of ``move`` in the 361-wide policy (pass -> 361)."""
    if move.point is None:
        return PASS_INDEX
    return move.point.row * GRID + move.point.col


def move_from_policy_index(index: int, size: int) -> Move:
    if index == PASS_INDEX:
        return Move()
    r, c = divmod(index, GRID)
    if r >= size or c >= size:
        raise ValueError(f"policy index {index} is off a {size}x{size} board")
    return Move.play(r, c)


@lru_cache(maxsize=None)
def board_to_grid_indices(size: int) -> np.ndarray:
    """Flat 19x19 index for each flat board point (read-only)."""
    r, c = np.divmod(np.arange(size * size), size)
    out = r * GRID + c
    out.flags.writeable = False
    return out


def encode(state: GameState, history: Sequence[GameState | None] = (), analysis: Analysis | None = None) -> np.ndarray:
    """Encode ``state`` as a float32 array of shape (31, 19, 19).

    ``history`` holds the positions one and two moves back, most recent
    first; missing entries are treated as empty boards. A precomputed
    ``analysis`` of ``state`` may be passed in to save the chain pass.
    """
    size = state.size
    if size > GRID:
        raise ValueError(f"board size {size} exceeds the {GRID}x{GRID} network input")
    n = size * size
    planes = np.zeros((NUM_PLANES, n), dtype=np.float32)
    board = np.frombuffer(bytes(state.board), dtype=np.uint8)
    planes[0] = board == 1
    planes[1] = board == 2
    for k, prev in enumerate(tuple(history)[:2]):
        if prev is None:
            continue
        if prev.size != size:
            raise ValueError("history positions must share the board size")
        pb = np.frombuffer(bytes(prev.board), dtype=np.uint8)
        planes[2 + 2 * k] = pb == 1
        planes[3 + 2 * k] = pb == 2
    if state.to_play == Color.BLACK:
        planes[6] = 1.0

    an = analysis if analysis is not None else analyze(state)
    me = int(state.to_play)
    opp = 3 - me
    raw = state.board
    laddered = []
    for chain in an.chains:
        nl = len(chain.libs)
        base = 7 if chain.color == 1 else 11
        idx = list(chain.stones)
        planes[base + _bucket(nl), idx] = 1.0
        if nl <= 2:
            laddered.append(chain)

    legal = [False] * n
    for p in range(n):
        if raw[p]:
            continue
        out = an.outcome(p)
        if out.legal:
            legal[p] = True
            planes[23, p] = 1.0
            planes[15 + _bucket(out.liberties), p] = 1.0
            if out.captured:
                planes[25 + _bucket(out.captured), p] = 1.0
        elif out.reason is IllegalReason.SUPERKO:
            planes[24, p] = 1.0

    if laddered:
        statuses, capture_mask, escape_mask = ladder_features(
            raw, size, [min(c.stones) for c in laddered], [c.color == opp for c in laddered],
            [c.color == me for c in laddered], legal,
        )  # fmt: skip
        for chain, status in zip(laddered, statuses):
            if status is LadderStatus.CAPTURED_BY_LADDER:
                planes[19 if chain.color == opp else 20, list(chain.stones)] = 1.0
        planes[21] = capture_mask
        planes[22] = escape_mask

    planes[29] = np.clip(state.komi / KOMI_SCALE, -1.0, 1.0)
    planes[30] = 1.0

    if size == GRID:
        return planes.reshape(NUM_PLANES, GRID, GRID)
    out = np.zeros((NUM_PLANES, GRID * GRID), dtype=np.float32)
    out[:, board_to_grid_indices(size)] = planes
    out[6] = planes[6, 0]
    out[29] = planes[29, 0]
    return out.reshape(NUM_PLANES, GRID, GRID)


@dataclass
class Position:
    """A state together with its two predecessors, as fed to ``encode_batch``."""

    state: GameState
    history: tuple[GameState | None, ...] = ()
    analysis: Analysis | None = None


def encode_batch(states: Sequence[GameState | Position]) -> np.ndarray:
    if not states:
        raise ValueError("cannot encode an empty batch")
    out = np.empty((len(states), NUM_PLANES, GRID, GRID), dtype=np.float32)
    for i, item in enumerate(states):
        if isinstance(item, Position):
            out[i] = encode(item.state, item.history, item.analysis)
        else:
            out[i] = encode(item)
    return out


def legal_policy_mask(state: GameState) -> np.ndarray:
    """Boolean mask over the 361 policy entries for legal board moves."""
    mask = np.zeros(POLICY_SIZE, dtype=bool)
    grid = board_to_grid_indices(state.size)
    mask[grid[analyze(state).legal_points()]] = True
    return mask
