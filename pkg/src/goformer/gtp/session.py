"""GTP v2 front-end over a search engine.

Replies are ``=[id] result`` or ``?[id] message``, each followed by one
blank line. Vertices use column letters A-T without I and row numbers
counted from the bottom edge.
"""

from __future__ import annotations

import sys
from dataclasses import replace
from typing import Callable, TextIO

from goformer import __version__
from goformer.goboard import MAX_SIZE, MIN_SIZE, PASS, Color, GameState, IllegalMoveError, Move, chinese_score
from goformer.models.network import Network
from goformer.search import Evaluator, SearchConfig, Searcher

COLUMNS = "ABCDEFGHJKLMNOPQRST"
ENGINE_NAME = "goformer"
COMMANDS = (
    "protocol_version",
    "name",
    "version",
    "known_command",
    "list_commands",
    "boardsize",
    "clear_board",
    "komi",
    "play",
    "genmove",
    "final_score",
    "showboard",
    "quit",
)


class GtpError(Exception):
    pass


def parse_color(text: str) -> Color:
    t = text.lower()
    if t in ("b", "black"):
        return Color.BLACK
    if t in ("w", "white"):
        return Color.WHITE
    raise GtpError("invalid color")


def parse_vertex(text: str, size: int) -> Move:
    t = text.upper()
    if t == "PASS":
        return PASS
    if len(t) < 2 or t[0] not in COLUMNS or not t[1:].isdigit():
        raise GtpError("invalid vertex")
    col = COLUMNS.index(t[0])
    number = int(t[1:])
    if col >= size or not 1 <= number <= size:
        raise GtpError("invalid vertex")
    return Move.play(size - number, col)


def format_vertex(move: Move, size: int) -> str:
    if move.point is None:
        return "pass"
    return f"{COLUMNS[move.point.col]}{size - move.point.row}"


def score_string(state: GameState) -> str:
    b, w, winner = chinese_score(state)
    return f"{'B' if winner == Color.BLACK else 'W'}+{abs(b - w):.1f}"


def board_diagram(state: GameState) -> str:
    n = state.size
    letters = "   " + " ".join(COLUMNS[:n])
    rows = [letters]
    for r in range(n):
        cells = " ".join(".XO"[state.board[r * n + c]] for c in range(n))
        rows.append(f"{n - r:2d} {cells} {n - r:d}")
    rows.append(letters)
    return "\n".join(rows)


class GtpSession:
    """One GTP conversation: a game, its history and a searcher."""

    def __init__(self, engine: Network | Evaluator, cfg: SearchConfig = SearchConfig(), size: int = 19, komi: float = 7.5):
        self.engine = engine
        self.cfg = cfg
        self.size = size
        self.komi = komi
        self.closed = False
        self.commands = 0
        self._handlers: dict[str, Callable[[list[str]], str]] = {
            name: getattr(self, f"cmd_{name}") for name in COMMANDS
        }
        self.clear()

    def clear(self) -> None:
        self.states = [GameState.new(self.size, self.komi)]
        self.searcher = Searcher(self.engine, self.cfg)

    @property
    def state(self) -> GameState:
        return self.states[-1]

    def _history(self):
        return (self.states[-2] if len(self.states) >= 2 else None, self.states[-3] if len(self.states) >= 3 else None)

    def _push(self, state: GameState) -> None:
        self.states.append(state)

    def handle(self, line: str) -> str:
        """Process one input line; returns the full reply, or "" for blank or comment lines."""
        text = "".join(" " if ch == "\t" else ch for ch in line.split("#", 1)[0] if ch >= " " or ch == "\t").strip()
        if not text:
            return ""
        parts = text.split()
        cid = ""
        if parts[0].isdigit():
            cid = parts.pop(0)
            if not parts:
                return f"?{cid} missing command\n\n"
        name, args = parts[0], parts[1:]
        self.commands += 1
        handler = self._handlers.get(name)
        if handler is None:
            return f"?{cid} unknown command\n\n"
        try:
            result = handler(args)
        except GtpError as err:
            return f"?{cid} {err}\n\n"
        return f"={cid} {result}\n\n"

    # -- commands ----------------------------------------------------------

    def cmd_protocol_version(self, args):
        return "2"

    def cmd_name(self, args):
        return ENGINE_NAME

    def cmd_version(self, args):
        return __version__

    def cmd_known_command(self, args):
        if len(args) != 1:
            raise GtpError("syntax error")
        return "true" if args[0] in COMMANDS else "false"

    def cmd_list_commands(self, args):
        return "\n".join(COMMANDS)

    def cmd_boardsize(self, args):
        if len(args) != 1 or not args[0].isdigit():
            raise GtpError("syntax error")
        size = int(args[0])
        if not MIN_SIZE <= size <= MAX_SIZE:
            raise GtpError("unacceptable size")
        self.size = size
        self.clear()
        return ""

    def cmd_clear_board(self, args):
        self.clear()
        return ""

    def cmd_komi(self, args):
        try:
            komi = float(args[0]) if len(args) == 1 else None
        except ValueError:
            komi = None
        if komi is None:
            raise GtpError("syntax error")
        self.komi = komi
        self.states = [replace(s, komi=komi) for s in self.states]
        return ""

    def _prepared(self, color: Color) -> GameState:
        state = self.state
        if state.game_over:
            state = replace(state, consecutive_passes=0)
        return state.with_to_play(color)

    def cmd_play(self, args):
        if len(args) != 2:
            raise GtpError("syntax error")
        color = parse_color(args[0])
        move = parse_vertex(args[1], self.size)
        try:
            new = self._prepared(color).play(move)
        except IllegalMoveError:
            raise GtpError("illegal move") from None
        self._push(new)
        return ""

    def cmd_genmove(self, args):
        if len(args) != 1:
            raise GtpError("syntax error")
        state = self._prepared(parse_color(args[0]))
        move = self.searcher.search(state, self._history()).move
        self._push(state.play(move))
        self.searcher.advance(move)
        return format_vertex(move, self.size)

    def cmd_final_score(self, args):
        return score_string(self.state)

    def cmd_showboard(self, args):
        return "\n" + board_diagram(self.state)

    def cmd_quit(self, args):
        self.closed = True
        return ""


def run_gtp(session: GtpSession, stdin: TextIO | None = None, stdout: TextIO | None = None) -> None:
    """Serve commands from ``stdin`` until ``quit`` or end of input."""
    stdin = sys.stdin if stdin is None else stdin
    stdout = sys.stdout if stdout is None else stdout
    for line in stdin:
        reply = session.handle(line)
        if reply:
            stdout.write(reply)
            stdout.flush()
        if session.closed:
            break
