"""gridlab: spreadsheet evaluation models behind pluggable policy profiles."""

from .addr import Addr, Rect
from .depgraph import DepGraph
from .engine import Engine, PolicyProfile, RecalcReport
from .grid import BLANK, CellError, Sheet

__all__ = ["Addr", "Rect", "DepGraph", "Engine", "PolicyProfile", "RecalcReport", "BLANK", "CellError", "Sheet"]
__version__ = "0.1.0"
