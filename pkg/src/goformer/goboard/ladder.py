"""Ladder reading.

The ladder game is played on one target chain. The attacker may only play
on the target's liberties. The defender may extend on a liberty, capture
an adjacent attacker chain that is in atari; with two liberties it passes.
The defender escapes on reaching three liberties; the attacker wins when
the target is left with a single liberty on the attacker's turn. Lines
longer than ``LADDER_DEPTH_CAP`` plies count as escapes. Ko is ignored
inside the reading.

The search runs in numba-compiled kernels on a flat int8 board. Positions
are memoized per read under a 64-bit Zobrist key.
"""

from __future__ import annotations

import enum
from functools import lru_cache

import numpy as np
from numba import njit, types
from numba.typed import Dict

from goformer.goboard.board import GameState, GroupInfo, neighbor_table

LADDER_DEPTH_CAP = 64
_ATTACKER_TURN = 0
_DEFENDER_TURN = 1
_NONE = -1


class LadderStatus(enum.Enum):
    CAPTURED_BY_LADDER = "captured"
    ESCAPES_LADDER = "escapes"
    NOT_APPLICABLE = "n/a"


@lru_cache(maxsize=None)
def _tables(size: int) -> tuple[np.ndarray, np.ndarray]:
    """Neighbour table padded with -1, and Zobrist keys per (point, colour, turn)."""
    n = size * size
    nbrs = np.full((n, 4), -1, dtype=np.int32)
    for p, row in enumerate(neighbor_table(size)):
        nbrs[p, : len(row)] = row
    rng = np.random.default_rng(0x1ADDE5 + size)
    zob = rng.integers(np.iinfo(np.int64).min, np.iinfo(np.int64).max, size=(n + 1, 3), dtype=np.int64)
    return nbrs, zob


# Workspace rows shared by the kernels of one scan: flood marks and stack,
# a second mark/stack pair for the defender-move flood, and two point buffers.
_MARK, _STACK, _MARK2, _STACK2, _BUF, _LIBS = range(6)


def _workspace(n: int) -> np.ndarray:
    return np.zeros((6, n), np.int64)


@njit(cache=True)
def _libs(board, nbrs, p, limit, out, ws, stamp):
    """Write the liberties of the chain at ``p`` into ``out``; stop once more than ``limit`` are found."""
    stamp[0] += 1
    s = stamp[0]
    mark = ws[_MARK]
    stack = ws[_STACK]
    color = board[p]
    stack[0] = p
    mark[p] = s
    top = 1
    count = 0
    while top:
        top -= 1
        x = stack[top]
        for k in range(4):
            q = nbrs[x, k]
            if q < 0 or mark[q] == s:
                continue
            v = board[q]
            if v == 0:
                mark[q] = s
                out[count] = q
                count += 1
                if 0 <= limit < count:
                    return count
            elif v == color:
                mark[q] = s
                stack[top] = q
                top += 1
    return count


@njit(cache=True)
def _remove(board, nbrs, p, ws):
    color = board[p]
    stack = ws[_STACK]
    stack[0] = p
    board[p] = 0
    top = 1
    while top:
        top -= 1
        x = stack[top]
        for k in range(4):
            q = nbrs[x, k]
            if q >= 0 and board[q] == color:
                board[q] = 0
                stack[top] = q
                top += 1


@njit(cache=True)
def _place(board, nbrs, p, color, ws, stamp, dest):
    """Write ``board`` plus ``color`` at ``p``, dead neighbours removed, into ``dest``; False if suicidal."""
    dest[:] = board
    dest[p] = color
    other = 3 - color
    buf = ws[_BUF]
    captured = False
    for k in range(4):
        q = nbrs[p, k]
        if q >= 0 and dest[q] == other and _libs(dest, nbrs, q, 0, buf, ws, stamp) == 0:
            _remove(dest, nbrs, q, ws)
            captured = True
    return captured or _libs(dest, nbrs, p, 0, buf, ws, stamp) > 0


@njit(cache=True)
def _key(board, zob, turn):
    h = zob[board.shape[0], turn]
    for i in range(board.shape[0]):
        v = board[i]
        if v:
            h ^= zob[i, v]
    return h


@njit(cache=True)
def _defender_moves(board, nbrs, target, attacker, ws, stamp, out):
    """Target liberties plus the last liberty of every adjacent attacker chain in atari.

    Writes the points to ``out`` in ascending order and returns their count.
    """
    defender = 3 - attacker
    stamp[0] += 1
    s = stamp[0]
    mark = ws[_MARK2]
    stack = ws[_STACK2]
    buf = ws[_BUF]
    stack[0] = target
    mark[target] = s
    top = 1
    count = 0
    while top:
        top -= 1
        x = stack[top]
        for k in range(4):
            q = nbrs[x, k]
            if q < 0 or mark[q] == s:
                continue
            v = board[q]
            mark[q] = s
            if v == 0:
                out[count] = q
                count += 1
            elif v == defender:
                stack[top] = q
                top += 1
            elif _libs(board, nbrs, q, 1, buf, ws, stamp) == 1 and mark[buf[0]] != s:
                mark[buf[0]] = s
                out[count] = buf[0]
                count += 1
    for i in range(1, count):
        v = out[i]
        j = i - 1
        while j >= 0 and out[j] > v:
            out[j + 1] = out[j]
            j -= 1
        out[j + 1] = v
    return count


@njit(cache=True)
def _record(wins, losses, key, depth, result):
    # a capture proven with less depth to spare still holds with more, and an
    # escape proven with more depth to spare still holds with less
    if result:
        if key not in wins or wins[key] < depth:
            wins[key] = depth
    elif key not in losses or losses[key] > depth:
        losses[key] = depth


_ENTER, _NEXT, _RETURN = 0, 1, 2


@njit(cache=True)
def _solve(board, nbrs, zob, target, defender, turn, depth, cap, wins, losses, ws, stamp, boards, moves):
    """True when the attacker captures the target with ``turn`` to move.

    Depth-first AND/OR search on an explicit frame stack (numba's on-disk
    cache cannot reload recursive kernels). A frame on the defender's turn
    with two liberties has ``nmoves == -1``: its only child is the attacker
    to move on the same board. ``boards`` and ``moves`` hold one row per frame.
    """
    attacker = 3 - defender
    frames = boards.shape[0]
    nmoves = np.zeros(frames, np.int64)
    nxt = np.zeros(frames, np.int64)
    turns = np.zeros(frames, np.int64)
    depths = np.zeros(frames, np.int64)
    keys = np.zeros(frames, np.int64)
    libs = ws[_LIBS]
    boards[0] = board
    turns[0] = turn
    depths[0] = depth
    top = 0
    mode = _ENTER
    value = False
    while True:
        if mode == _ENTER:
            b = boards[top]
            mode = _RETURN
            if b[target] != defender:
                value = True
                continue
            nl = _libs(b, nbrs, target, 2, libs, ws, stamp)
            d = depths[top]
            if turns[top] == _ATTACKER_TURN and nl == 1:
                value = True
                continue
            if nl >= 3 or d >= cap:
                value = False
                continue
            key = _key(b, zob, turns[top])
            if key in wins and d <= wins[key]:
                value = True
                continue
            if key in losses and d >= losses[key]:
                value = False
                continue
            keys[top] = key
            nxt[top] = 0
            if turns[top] == _ATTACKER_TURN:
                moves[top, 0] = min(libs[0], libs[1])
                moves[top, 1] = max(libs[0], libs[1])
                nmoves[top] = 2
            elif nl >= 2:
                nmoves[top] = -1
            else:
                nmoves[top] = _defender_moves(b, nbrs, target, attacker, ws, stamp, moves[top])
            mode = _NEXT
        elif mode == _RETURN:
            if top == 0:
                return value
            top -= 1
            # the parent folds in its child's value
            if nmoves[top] == -1:
                finished = True
            elif turns[top] == _ATTACKER_TURN:
                finished = value
            else:
                finished = not value
            if finished:
                _record(wins, losses, keys[top], depths[top], value)
            else:
                mode = _NEXT
        else:
            b = boards[top]
            child = boards[top + 1]
            pushed = False
            escaped = False
            if nmoves[top] == -1:
                child[:] = b
                turns[top + 1] = _ATTACKER_TURN
                pushed = True
            elif turns[top] == _ATTACKER_TURN:
                while nxt[top] < nmoves[top]:
                    p = moves[top, nxt[top]]
                    nxt[top] += 1
                    if _place(b, nbrs, p, attacker, ws, stamp, child):
                        turns[top + 1] = _DEFENDER_TURN
                        pushed = True
                        break
            else:
                while nxt[top] < nmoves[top]:
                    p = moves[top, nxt[top]]
                    nxt[top] += 1
                    if not _place(b, nbrs, p, defender, ws, stamp, child) or child[target] != defender:
                        continue
                    nl2 = _libs(child, nbrs, target, 2, libs, ws, stamp)
                    if nl2 >= 3:
                        escaped = True
                        break
                    if nl2 == 2:
                        turns[top + 1] = _ATTACKER_TURN
                        pushed = True
                        break
            if pushed:
                depths[top + 1] = depths[top] + 1
                top += 1
                mode = _ENTER
                continue
            # children exhausted, or an immediate escape
            value = turns[top] != _ATTACKER_TURN and not escaped
            _record(wins, losses, keys[top], depths[top], value)
            mode = _RETURN


@njit(cache=True)
def _scan(board, nbrs, zob, target, cap, legal, want_captures, want_escapes, wins, losses, ws, stamp, boards, moves, captures, escapes):
    """Read the chain at ``target``; mark its ladder-capture and escape points in the masks.

    Returns -1 for three or more liberties, 1 for captured, 0 for escapes.
    """
    n = board.shape[0]
    defender = board[target]
    attacker = 3 - defender
    wins.clear()
    losses.clear()
    libs = np.empty(3, np.int64)
    nl = _libs(board, nbrs, target, 2, libs, ws, stamp)
    if nl >= 3:
        return _NONE
    turn = _DEFENDER_TURN if nl == 1 else _ATTACKER_TURN
    captured = _solve(board, nbrs, zob, target, defender, turn, 0, cap, wins, losses, ws, stamp, boards, moves)
    after = np.empty(n, np.int8)
    if want_captures and nl == 2:
        for i in range(nl):
            p = libs[i]
            if legal[p] and _place(board, nbrs, p, attacker, ws, stamp, after):
                if _solve(after, nbrs, zob, target, defender, _DEFENDER_TURN, 1, cap, wins, losses, ws, stamp, boards, moves):
                    captures[p] = 1
    if want_escapes and (nl == 1 or captured):
        cand = np.empty(n, np.int64)
        for i in range(_defender_moves(board, nbrs, target, attacker, ws, stamp, cand)):
            p = cand[i]
            if not legal[p] or not _place(board, nbrs, p, defender, ws, stamp, after) or after[target] != defender:
                continue
            nl2 = _libs(after, nbrs, target, 2, ws[_BUF], ws, stamp)
            if nl2 >= 3 or (
                nl2 == 2
                and not _solve(after, nbrs, zob, target, defender, _ATTACKER_TURN, 1, cap, wins, losses, ws, stamp, boards, moves)
            ):
                escapes[p] = 1
    return 1 if captured else 0


@njit(cache=True)
def _scan_many(board, nbrs, zob, targets, cap, legal, want_captures, want_escapes, ws):
    n = board.shape[0]
    status = np.empty(targets.shape[0], np.int64)
    captures = np.zeros(n, np.uint8)
    escapes = np.zeros(n, np.uint8)
    wins = Dict.empty(key_type=types.int64, value_type=types.int64)
    losses = Dict.empty(key_type=types.int64, value_type=types.int64)
    stamp = np.zeros(1, np.int64)
    boards = np.empty((max(cap, 0) + 2, n), np.int8)
    moves = np.empty((max(cap, 0) + 2, n), np.int64)
    for i in range(targets.shape[0]):
        status[i] = _scan(
            board, nbrs, zob, targets[i], cap, legal, want_captures[i], want_escapes[i],
            wins, losses, ws, stamp, boards, moves, captures, escapes,
        )  # fmt: skip
    return status, captures, escapes


_STATUS = {_NONE: LadderStatus.NOT_APPLICABLE, 1: LadderStatus.CAPTURED_BY_LADDER, 0: LadderStatus.ESCAPES_LADDER}


def _as_array(board) -> np.ndarray:
    if isinstance(board, np.ndarray):
        return board.astype(np.int8, copy=False)
    return np.frombuffer(bytes(board), dtype=np.int8)


def ladder_scan(
    board, size: int, target: int, legal=None, captures: bool = False, escapes: bool = False, cap: int = LADDER_DEPTH_CAP
) -> tuple[LadderStatus, list[int], list[int]]:
    """Read the chain at ``target`` once and optionally list its ladder moves.

    ``captures`` asks for the liberties where the attacker starts a working
    ladder (two-liberty chains only); ``escapes`` asks for the defender moves
    that get out (chains in atari, or captured ones). Points not set in
    ``legal`` are skipped.
    """
    n = size * size
    mask = np.ones(n, np.uint8) if legal is None else legal
    status, cap_mask, esc_mask = ladder_features(board, size, [target], [captures], [escapes], mask, cap)
    return status[0], np.flatnonzero(cap_mask).tolist(), np.flatnonzero(esc_mask).tolist()


def ladder_features(
    board, size: int, targets, captures, escapes, legal, cap: int = LADDER_DEPTH_CAP
) -> tuple[list[LadderStatus], np.ndarray, np.ndarray]:
    """``ladder_scan`` over several chains in one call.

    Returns per-target statuses and the union of capture and escape points
    as 0/1 masks over the board.
    """
    arr = _as_array(board)
    nbrs, zob = _tables(size)
    t = np.asarray(targets, dtype=np.int64)
    if len(t) and not arr[t].all():
        raise ValueError("no stone at a target point")
    status, cap_mask, esc_mask = _scan_many(
        arr, nbrs, zob, t, cap, np.asarray(legal, dtype=np.uint8),
        np.asarray(captures, dtype=np.bool_), np.asarray(escapes, dtype=np.bool_), _workspace(len(arr)),
    )  # fmt: skip
    return [_STATUS[int(x)] for x in status], cap_mask, esc_mask


def ladder_status_at(board, size: int, target: int, cap: int = LADDER_DEPTH_CAP) -> LadderStatus:
    return ladder_scan(board, size, target, cap=cap)[0]


def ladder_status(state: GameState, group: GroupInfo) -> LadderStatus:
    stone = min(group.stones)
    return ladder_status_at(state.board, state.size, stone.row * state.size + stone.col)
