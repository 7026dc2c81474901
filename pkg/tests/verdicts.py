"""Collects one PASS/FAIL line per acceptance criterion for the terminal summary."""

from __future__ import annotations

import functools
import time

LINES: dict[int, str] = {}


def criterion(number: int, title: str):
    """Print and record a verdict line for the wrapped test.

    The test returns a short detail string on success; any exception is
    recorded as a failure and re-raised.
    """

    def wrap(fn):
        @functools.wraps(fn)
        def run(*args, **kwargs):
            t0 = time.perf_counter()
            try:
                detail = fn(*args, **kwargs)
            except BaseException as exc:
                first = (str(exc).strip().splitlines() or [""])[0]
                _record(number, title, False, f"{type(exc).__name__}: {first}"[:400], time.perf_counter() - t0)
                raise
            _record(number, title, True, detail or "", time.perf_counter() - t0)

        return run

    return wrap


def _record(number, title, ok, detail, elapsed):
    line = f"criterion {number:2d} {'PASS' if ok else 'FAIL'} [{elapsed:6.1f}s] {title}: {detail}"
    LINES[number] = line
    print(line)
