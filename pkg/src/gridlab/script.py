"""Edit-script parsing. One operation per line::

    SET A2 = =A1+A2
    MOVE A3:A5 -> B3
    COPY A3:A5 -> C3
    CLEAR A1:A2
    INSROW 3 1          DELROW 3 1
    INSCOL C 1          DELCOL C 1
    FILL A1:A4 -> A1:A14 VALUES PLAIN
    ASSERT A2 == 12
    ASSERT A4 TEXT "=D2*10"
    DUMP

Keywords are case-insensitive; ``#`` starts a comment line.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from typing import Union

from .addr import Addr, Rect, col_index
from .edits import Clear, Copy, Delete, EditOp, Fill, Insert, Move, Set
from .errors import FormulaSyntaxError, GridlabError, InputError
from .grid import BLANK, ERROR_CODES, Value, content_from_text


@dataclass(frozen=True)
class Assert:
    addr: Addr
    kind: str  # "value" | "text"
    expected: object


@dataclass(frozen=True)
class Dump:
    pass


Command = Union[EditOp, Assert, Dump]


@dataclass(frozen=True)
class Step:
    line: int
    text: str
    command: Command


_SET = re.compile(r"^SET\s+(\S+?)\s*=\s?(.*)$", re.IGNORECASE)
_ARROW = re.compile(r"^(MOVE|COPY)\s+(\S+)\s*->\s*(\S+)$", re.IGNORECASE)
_CLEAR = re.compile(r"^CLEAR\s+(\S+)$", re.IGNORECASE)
_AXIS = re.compile(r"^(INS|DEL)(ROW|COL)\s+(\S+)(?:\s+(\d+))?$", re.IGNORECASE)
_FILL = re.compile(r"^FILL\s+(\S+)\s*->\s*(\S+)(?:\s+(VALUES|FORMULAS))?(?:\s+(PLAIN|CTRL))?$", re.IGNORECASE)
_ASSERT = re.compile(r"^ASSERT\s+(\S+)\s+(==|TEXT)\s+(.*)$", re.IGNORECASE)


def parse_expected(text: str) -> Value:
    """Value literal in an ASSERT: number, "text", TRUE/FALSE, BLANK or an error code."""
    text = text.strip()
    upper = text.upper()
    if upper in ERROR_CODES:
        return ERROR_CODES[upper]
    if upper == "BLANK":
        return BLANK
    if upper in ("TRUE", "FALSE"):
        return upper == "TRUE"
    if text.startswith('"'):
        return json.loads(text)
    return float(text)


def parse_line(line: str) -> Command:
    text = line.strip()
    if m := _SET.match(text):
        return Set(Addr.parse(m.group(1)), m.group(2))
    if m := _ARROW.match(text):
        cls = Move if m.group(1).upper() == "MOVE" else Copy
        return cls(Rect.parse(m.group(2)), Addr.parse(m.group(3)))
    if m := _CLEAR.match(text):
        return Clear(Rect.parse(m.group(1)))
    if m := _AXIS.match(text):
        axis = m.group(2).lower()
        at = int(m.group(3)) if axis == "row" else col_index(m.group(3))
        n = int(m.group(4) or 1)
        return (Insert if m.group(1).upper() == "INS" else Delete)(axis, at, n)
    if m := _FILL.match(text):
        return Fill(
            Rect.parse(m.group(1)),
            Rect.parse(m.group(2)),
            (m.group(3) or "values").lower(),
            (m.group(4) or "plain").lower(),
        )
    if m := _ASSERT.match(text):
        addr = Addr.parse(m.group(1))
        if m.group(2) == "==":
            return Assert(addr, "value", parse_expected(m.group(3)))
        return Assert(addr, "text", json.loads(m.group(3).strip()))
    if text.upper() == "DUMP":
        return Dump()
    raise ValueError("unrecognised command")


def parse_script(text: str, path: str = "<script>") -> list[Step]:
    steps = []
    for lineno, line in enumerate(text.splitlines(), 1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        try:
            command = parse_line(stripped)
            if isinstance(command, Set):
                content_from_text(command.raw, command.addr)
        except FormulaSyntaxError as exc:
            col = line.rindex(command.raw) + exc.offset + 1
            raise InputError(exc.message, path, lineno, col) from exc
        except (ValueError, GridlabError) as exc:
            col = len(line) - len(line.lstrip()) + 1
            raise InputError(f"{exc}: {stripped!r}", path, lineno, col) from exc
        steps.append(Step(lineno, stripped, command))
    return steps
