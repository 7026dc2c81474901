"""Go Text Protocol (v2 subset) front-end."""

from goformer.gtp.session import (
    COMMANDS,
    GtpError,
    GtpSession,
    board_diagram,
    format_vertex,
    parse_color,
    parse_vertex,
    run_gtp,
    score_string,
)

__all__ = [
    "COMMANDS",
    "GtpError",
    "GtpSession",
    "board_diagram",
    "format_vertex",
    "parse_color",
    "parse_vertex",
    "run_gtp",
    "score_string",
]
