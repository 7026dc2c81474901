"""Immutable Go positions: placement, capture, positional superko and area scoring.

Points are stored on a flat tuple indexed ``row * size + col``. Every
``GameState`` is a value; ``play`` returns a new state and never mutates.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace
from functools import lru_cache
from typing import NamedTuple

import numpy as np

MIN_SIZE = 5
MAX_SIZE = 19


class Color(enum.IntEnum):
    EMPTY = 0
    BLACK = 1
    WHITE = 2

    @property
    def opponent(self) -> "Color":
        return opponent(self)


def opponent(color: Color) -> Color:
    if color == Color.BLACK:
        return Color.WHITE
    if color == Color.WHITE:
        return Color.BLACK
    raise ValueError("EMPTY has no opponent")


class Point(NamedTuple):
    row: int
    col: int


@dataclass(frozen=True)
class Move:
    """A play at ``point`` or, when ``point`` is None, a pass."""

    point: Point | None = None

    @classmethod
    def play(cls, row: int, col: int) -> "Move":
        return cls(Point(row, col))

    @property
    def is_pass(self) -> bool:
        return self.point is None

    def index(self, size: int) -> int:
        """Board-local move index; pass maps to ``size * size``."""
        if self.point is None:
            return size * size
        return self.point.row * size + self.point.col

    @classmethod
    def from_index(cls, index: int, size: int) -> "Move":
        if index == size * size:
            return PASS
        return cls(Point(*divmod(index, size)))

    def __str__(self) -> str:
        return "pass" if self.point is None else f"({self.point.row},{self.point.col})"


PASS = Move()


class IllegalReason(enum.Enum):
    OCCUPIED = "occupied"
    SUICIDE = "suicide"
    SUPERKO = "superko"
    OFF_BOARD = "off-board"


class IllegalMoveError(ValueError):
    def __init__(self, move: Move, reason: IllegalReason):
        super().__init__(f"illegal move {move}: {reason.value}")
        self.move = move
        self.reason = reason


@dataclass(frozen=True)
class GroupInfo:
    stones: frozenset[Point]
    liberties: frozenset[Point]
    color: Color


@lru_cache(maxsize=None)
def neighbor_table(size: int) -> tuple[tuple[int, ...], ...]:
    table = []
    for idx in range(size * size):
        r, c = divmod(idx, size)
        nbrs = []
        if r > 0:
            nbrs.append(idx - size)
        if r < size - 1:
            nbrs.append(idx + size)
        if c > 0:
            nbrs.append(idx - 1)
        if c < size - 1:
            nbrs.append(idx + 1)
        table.append(tuple(nbrs))
    return tuple(table)


class _Zobrist(NamedTuple):
    stones: tuple[tuple[int, ...], ...]  # indexed [color][point]
    black_to_play: int


@lru_cache(maxsize=None)
def zobrist_table(size: int) -> _Zobrist:
    rng = np.random.default_rng(0x5A0B ^ size)
    keys = rng.integers(0, 2**64, size=(2, size * size + 1), dtype=np.uint64)
    stones = (
        (0,) * (size * size),
        tuple(int(k) for k in keys[0, :-1]),
        tuple(int(k) for k in keys[1, :-1]),
    )
    return _Zobrist(stones, int(keys[0, -1]))


def board_hash(board: tuple[int, ...], size: int) -> int:
    z = zobrist_table(size).stones
    h = 0
    for idx, c in enumerate(board):
        if c:
            h ^= z[c][idx]
    return h


def position_hash(board: tuple[int, ...], size: int, to_play: Color) -> int:
    h = board_hash(board, size)
    if to_play == Color.BLACK:
        h ^= zobrist_table(size).black_to_play
    return h


def chain_at(board, nbrs, idx: int) -> tuple[set[int], set[int]]:
    """Flood-fill the chain through ``idx``; returns (stones, liberties)."""
    color = board[idx]
    stones = {idx}
    libs: set[int] = set()
    frontier = [idx]
    while frontier:
        p = frontier.pop()
        for q in nbrs[p]:
            v = board[q]
            if v == 0:
                libs.add(q)
            elif v == color and q not in stones:
                stones.add(q)
                frontier.append(q)
    return stones, libs


def liberties_upto(board, nbrs, idx: int, limit: int, seen: set[int] | None = None) -> set[int]:
    """Liberties of the chain through ``idx``, stopping once more than ``limit`` are found.

    Stones visited are added to ``seen`` when given.
    """
    color = board[idx]
    if seen is None:
        seen = set()
    seen.add(idx)
    libs: set[int] = set()
    frontier = [idx]
    while frontier:
        p = frontier.pop()
        for q in nbrs[p]:
            v = board[q]
            if v == 0:
                libs.add(q)
                if len(libs) > limit:
                    return libs
            elif v == color and q not in seen:
                seen.add(q)
                frontier.append(q)
    return libs


def place(board, size: int, idx: int, color: int) -> tuple[list[int], list[int]] | None:
    """Place ``color`` at empty ``idx`` with captures.

    Returns the new board list and captured indices, or None on suicide.
    Ko is not considered.
    """
    nbrs = neighbor_table(size)
    new = list(board)
    new[idx] = color
    other = 3 - color
    captured: list[int] = []
    for q in nbrs[idx]:
        if new[q] == other:
            stones, libs = chain_at(new, nbrs, q)
            if not libs:
                for s in stones:
                    new[s] = 0
                captured.extend(stones)
    if not captured and all(new[q] for q in nbrs[idx]):
        _, libs = chain_at(new, nbrs, idx)
        if not libs:
            return None
    return new, captured


@dataclass(frozen=True)
class GameState:
    size: int
    board: tuple[int, ...]
    to_play: Color
    komi: float
    history: tuple[tuple[Move, int], ...] = ()
    captures_black: int = 0
    captures_white: int = 0
    consecutive_passes: int = 0
    hash: int = 0
    seen: frozenset[int] = field(default=frozenset(), repr=False)

    @classmethod
    def new(cls, size: int = 19, komi: float = 7.5, to_play: Color = Color.BLACK) -> "GameState":
        if not MIN_SIZE <= size <= MAX_SIZE:
            raise ValueError(f"board size {size} outside {MIN_SIZE}..{MAX_SIZE}")
        board = (0,) * (size * size)
        h = position_hash(board, size, to_play)
        return cls(size, board, Color(to_play), float(komi), hash=h, seen=frozenset([h]))

    @classmethod
    def from_diagram(cls, diagram: str, to_play: Color = Color.BLACK, komi: float = 0.0) -> "GameState":
        """Build a position from rows of ``X`` (black), ``O`` (white) and ``.``."""
        rows = [r.split() if " " in r.strip() else list(r.strip()) for r in diagram.strip().splitlines()]
        size = len(rows)
        if any(len(r) != size for r in rows):
            raise ValueError("diagram must be square")
        code = {"X": 1, "B": 1, "O": 2, "W": 2, ".": 0, "+": 0}
        board = tuple(code[ch] for row in rows for ch in row)
        return cls.from_board(board, size, to_play, komi)

    @classmethod
    def from_board(cls, board, size: int, to_play: Color = Color.BLACK, komi: float = 0.0) -> "GameState":
        board = tuple(int(v) for v in board)
        if len(board) != size * size:
            raise ValueError("board length does not match size")
        h = position_hash(board, size, to_play)
        return cls(size, board, Color(to_play), float(komi), hash=h, seen=frozenset([h]))

    # -- queries -----------------------------------------------------------

    @property
    def game_over(self) -> bool:
        return self.consecutive_passes >= 2

    @property
    def move_number(self) -> int:
        return len(self.history)

    def __getitem__(self, point: Point) -> Color:
        return Color(self.board[point.row * self.size + point.col])

    def on_board(self, point: Point) -> bool:
        return 0 <= point.row < self.size and 0 <= point.col < self.size

    def grid(self) -> list[list[Color]]:
        n = self.size
        return [[Color(self.board[r * n + c]) for c in range(n)] for r in range(n)]

    def group_at(self, point: Point) -> GroupInfo:
        idx = point.row * self.size + point.col
        color = self.board[idx]
        if color == 0:
            raise ValueError(f"no stone at {point}")
        stones, libs = chain_at(self.board, neighbor_table(self.size), idx)
        return GroupInfo(self._points(stones), self._points(libs), Color(color))

    def groups(self) -> list[GroupInfo]:
        seen: set[int] = set()
        out = []
        nbrs = neighbor_table(self.size)
        for idx, c in enumerate(self.board):
            if c and idx not in seen:
                stones, libs = chain_at(self.board, nbrs, idx)
                seen |= stones
                out.append(GroupInfo(self._points(stones), self._points(libs), Color(c)))
        return out

    def _points(self, indices) -> frozenset[Point]:
        n = self.size
        return frozenset(Point(*divmod(i, n)) for i in indices)

    # -- moves -------------------------------------------------------------

    def _check_move(self, move: Move):
        """Return (new_board, captured, new_hash) or raise IllegalMoveError."""
        if move.point is None:
            return None
        if not self.on_board(move.point):
            raise IllegalMoveError(move, IllegalReason.OFF_BOARD)
        idx = move.point.row * self.size + move.point.col
        if self.board[idx]:
            raise IllegalMoveError(move, IllegalReason.OCCUPIED)
        color = int(self.to_play)
        placed = place(self.board, self.size, idx, color)
        if placed is None:
            raise IllegalMoveError(move, IllegalReason.SUICIDE)
        new, captured = placed
        z = zobrist_table(self.size)
        h = self.hash ^ z.stones[color][idx] ^ z.black_to_play
        for s in captured:
            h ^= z.stones[3 - color][s]
        if h in self.seen:
            raise IllegalMoveError(move, IllegalReason.SUPERKO)
        return new, captured, h

    def is_legal(self, move: Move) -> bool:
        try:
            self._check_move(move)
        except IllegalMoveError as err:
            if err.reason is IllegalReason.OFF_BOARD:
                raise
            return False
        return True

    def play(self, move: Move) -> "GameState":
        if self.game_over:
            raise ValueError("game is over")
        checked = self._check_move(move)
        if checked is None:
            h = self.hash ^ zobrist_table(self.size).black_to_play
            return replace(
                self,
                to_play=opponent(self.to_play),
                history=self.history + ((move, h),),
                consecutive_passes=self.consecutive_passes + 1,
                hash=h,
                seen=self.seen | {h},
            )
        new, captured, h = checked
        cb, cw = self.captures_black, self.captures_white
        if self.to_play == Color.BLACK:
            cb += len(captured)
        else:
            cw += len(captured)
        return replace(
            self,
            board=tuple(new),
            to_play=opponent(self.to_play),
            history=self.history + ((move, h),),
            captures_black=cb,
            captures_white=cw,
            consecutive_passes=0,
            hash=h,
            seen=self.seen | {h},
        )

    def with_to_play(self, color: Color) -> "GameState":
        """Same position with ``color`` to move; history and superko record are kept."""
        if Color(color) == self.to_play:
            return self
        h = self.hash ^ zobrist_table(self.size).black_to_play
        return replace(self, to_play=Color(color), hash=h, seen=self.seen | {h})

    def legal_moves(self) -> set[Move]:
        from goformer.goboard.analysis import analyze

        return analyze(self).legal_moves()


def place_stone(state: GameState, point: Point, color: Color) -> GameState:
    """Put a stone of ``color`` on the board for position setup.

    Captures apply and suicide is rejected, but turn order, history and
    superko are bypassed; the result starts a fresh history.
    """
    if not state.on_board(point):
        raise IllegalMoveError(Move(point), IllegalReason.OFF_BOARD)
    idx = point.row * state.size + point.col
    if state.board[idx]:
        raise IllegalMoveError(Move(point), IllegalReason.OCCUPIED)
    placed = place(state.board, state.size, idx, int(color))
    if placed is None:
        raise IllegalMoveError(Move(point), IllegalReason.SUICIDE)
    return GameState.from_board(placed[0], state.size, state.to_play, state.komi)


def is_legal(state: GameState, move: Move) -> bool:
    return state.is_legal(move)


def play(state: GameState, move: Move) -> GameState:
    return state.play(move)


def legal_moves(state: GameState) -> set[Move]:
    return state.legal_moves()


def chinese_score(state: GameState) -> tuple[float, float, Color]:
    """Area score: stones plus single-colour-bordered empty regions, komi to White."""
    size = state.size
    board = state.board
    nbrs = neighbor_table(size)
    black = board.count(1)
    white = board.count(2)
    visited = bytearray(size * size)
    for start, c in enumerate(board):
        if c or visited[start]:
            continue
        region = 0
        borders = 0
        visited[start] = 1
        stack = [start]
        while stack:
            p = stack.pop()
            region += 1
            for q in nbrs[p]:
                v = board[q]
                if v:
                    borders |= v
                elif not visited[q]:
                    visited[q] = 1
                    stack.append(q)
        if borders == 1:
            black += region
        elif borders == 2:
            white += region
    b = float(black)
    w = float(white) + state.komi
    return b, w, (Color.BLACK if b > w else Color.WHITE)
