import sys
from pathlib import Path

import pytest

from gridlab import Engine, PolicyProfile
from gridlab.addr import Addr

sys.path.insert(0, str(Path(__file__).parent))

ROOT = Path(__file__).resolve().parent.parent
CORPUS = ROOT / "corpus"

AGGREGATES = {"A1": "1", "A2": "2", "A3": "=A1*10", "A4": "=A2*10", "A5": "=SUM(A1:A2)", "A6": "=SUM(A1:A4)"}
CONDITIONAL = {"A1": "5", "A2": "=A1*2", "A3": "3", "B2": "=IF(A2>0;A2;A3)", "B4": "=B2+1"}
STAIRCASE = {"C3": "1", **{f"C{r}": f"=C{r - 1}+1" for r in range(4, 11)}}


def load(cells: dict, profile: str = "excel") -> Engine:
    return Engine.load([(Addr.parse(k), v) for k, v in cells.items()], PolicyProfile.load(profile))


def val(engine: Engine, a: str):
    return engine.value(Addr.parse(a))


def text(engine: Engine, a: str) -> str:
    return engine.sheet.text(Addr.parse(a))


@pytest.fixture
def corpus():
    return CORPUS


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in mod.report_lines():
        terminalreporter.write_line(line)
