"""Go rules engine: legality, capture, positional superko, area scoring and ladders."""

from goformer.goboard.analysis import Analysis, MoveOutcome, analyze
from goformer.goboard.board import (
    MAX_SIZE,
    MIN_SIZE,
    PASS,
    Color,
    GameState,
    GroupInfo,
    IllegalMoveError,
    IllegalReason,
    Move,
    Point,
    chinese_score,
    is_legal,
    legal_moves,
    opponent,
    place_stone,
    play,
)
from goformer.goboard.ladder import LADDER_DEPTH_CAP, LadderStatus, ladder_scan, ladder_status, ladder_status_at

__all__ = [
    "Analysis",
    "Color",
    "GameState",
    "GroupInfo",
    "IllegalMoveError",
    "IllegalReason",
    "LADDER_DEPTH_CAP",
    "LadderStatus",
    "MAX_SIZE",
    "MIN_SIZE",
    "Move",
    "MoveOutcome",
    "PASS",
    "Point",
    "analyze",
    "chinese_score",
    "is_legal",
    "ladder_scan",
    "ladder_status",
    "ladder_status_at",
    "legal_moves",
    "opponent",
    "place_stone",
    "play",
]
