"""Whole-board chain analysis shared by move generation and the feature encoder.

Move outcomes are derived from chain liberties rather than by trial
placement, so one pass over the board answers legality, liberties after
the move and capture size for every empty point.
"""

from __future__ import annotations

from dataclasses import dataclass

from goformer.goboard.board import (
    PASS,
    GameState,
    IllegalReason,
    Move,
    neighbor_table,
    zobrist_table,
)


@dataclass
class Chain:
    color: int
    stones: set[int]
    libs: set[int]


@dataclass(frozen=True)
class MoveOutcome:
    reason: IllegalReason | None
    liberties: int = 0
    captured: int = 0

    @property
    def legal(self) -> bool:
        return self.reason is None


class Analysis:
    def __init__(self, state: GameState):
        self.state = state
        self.size = state.size
        self.nbrs = neighbor_table(state.size)
        board = state.board
        label = [-1] * len(board)
        chains: list[Chain] = []
        nbrs = self.nbrs
        for idx, c in enumerate(board):
            if not c or label[idx] >= 0:
                continue
            cid = len(chains)
            stones = {idx}
            libs: set[int] = set()
            label[idx] = cid
            stack = [idx]
            while stack:
                p = stack.pop()
                for q in nbrs[p]:
                    v = board[q]
                    if v == 0:
                        libs.add(q)
                    elif v == c and label[q] < 0:
                        label[q] = cid
                        stones.add(q)
                        stack.append(q)
            chains.append(Chain(c, stones, libs))
        self.label = label
        self.chains = chains
        self._outcomes: dict[int, MoveOutcome] = {}

    def chain_of(self, idx: int) -> Chain | None:
        cid = self.label[idx]
        return self.chains[cid] if cid >= 0 else None

    def outcome(self, idx: int, color: int | None = None) -> MoveOutcome:
        """Result of ``color`` (default: side to play) playing at ``idx``."""
        if color is None:
            color = int(self.state.to_play)
            cached = self._outcomes.get(idx)
            if cached is not None:
                return cached
            result = self._outcome(idx, color, check_superko=True)
            self._outcomes[idx] = result
            return result
        return self._outcome(idx, color, check_superko=color == int(self.state.to_play))

    def _outcome(self, idx: int, color: int, check_superko: bool) -> MoveOutcome:
        board = self.state.board
        if board[idx]:
            return MoveOutcome(IllegalReason.OCCUPIED)
        other = 3 - color
        own: dict[int, Chain] = {}
        captured: dict[int, Chain] = {}
        empty_nbrs = []
        for q in self.nbrs[idx]:
            v = board[q]
            if v == 0:
                empty_nbrs.append(q)
                continue
            cid = self.label[q]
            chain = self.chains[cid]
            if v == color:
                own[cid] = chain
            elif len(chain.libs) == 1:
                captured[cid] = chain
        n_captured = sum(len(c.stones) for c in captured.values())
        group = {idx}
        libs = set(empty_nbrs)
        for chain in own.values():
            group |= chain.stones
            libs |= chain.libs
        libs.discard(idx)
        if captured:
            nbrs = self.nbrs
            for chain in captured.values():
                for s in chain.stones:
                    if any(q in group for q in nbrs[s]):
                        libs.add(s)
        if not libs:
            return MoveOutcome(IllegalReason.SUICIDE)
        if check_superko:
            z = zobrist_table(self.size)
            h = self.state.hash ^ z.stones[color][idx] ^ z.black_to_play
            for chain in captured.values():
                zo = z.stones[other]
                for s in chain.stones:
                    h ^= zo[s]
            if h in self.state.seen:
                return MoveOutcome(IllegalReason.SUPERKO, len(libs), n_captured)
        return MoveOutcome(None, len(libs), n_captured)

    def legal_points(self) -> list[int]:
        board = self.state.board
        return [i for i in range(len(board)) if not board[i] and self.outcome(i).legal]

    def legal_moves(self) -> set[Move]:
        moves = {Move.from_index(i, self.size) for i in self.legal_points()}
        moves.add(PASS)
        return moves


def analyze(state: GameState) -> Analysis:
    return Analysis(state)
