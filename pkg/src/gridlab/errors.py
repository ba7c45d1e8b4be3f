"""Exception hierarchy shared by every gridlab module."""

from __future__ import annotations


class GridlabError(Exception):
    """Base class for all errors raised by gridlab."""


class FormulaSyntaxError(GridlabError):
    """Malformed formula text. ``offset`` is the 0-based character position."""

    def __init__(self, message: str, offset: int, text: str = ""):
        super().__init__(f"{message} at offset {offset}")
        self.message = message
        self.offset = offset
        self.text = text


class UnknownFunction(FormulaSyntaxError):
    def __init__(self, name: str, offset: int, text: str = ""):
        super().__init__(f"unknown function {name!r}", offset, text)
        self.name = name


class RefOutOfGrid(GridlabError):
    """A reference resolves outside the sheet bounds."""


class OutOfBounds(GridlabError):
    """An edit would place content outside the sheet bounds."""


class OverlapError(GridlabError):
    """A moved block partially overlaps its own source."""


class NonNumericSeed(GridlabError):
    """A value-series fill was seeded with non-numeric cells."""


class CircularReferenceError(GridlabError):
    """Raised under the strict policy when an edit would close a cycle."""

    def __init__(self, path):
        self.path = list(path)
        super().__init__("circular reference: " + " -> ".join(str(a) for a in self.path))


class InputError(GridlabError):
    """Malformed sheet, script or profile file."""

    def __init__(self, message: str, path: str = "<input>", line: int = 0, column: int = 0):
        super().__init__(f"{path}:{line}:{column}: {message}")
        self.path = path
        self.line = line
        self.column = column
