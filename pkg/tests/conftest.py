from __future__ import annotations

import sys
from pathlib import Path

import pytest

TESTS = Path(__file__).parent
DESIGNS = TESTS / "fixtures" / "designs"
sys.path.insert(0, str(TESTS))

_AC_TITLES = {
    "AC1": "mask/reinsert identity over the fixture corpus",
    "AC2": "masked strings for assign y = !a;",
    "AC3": "FIM split identity and control-token hygiene",
    "AC4": "combinational equivalence vs truth tables",
    "AC5": "sequential base case vs exhaustive simulation",
    "AC6": "SAT solver vs exhaustive enumeration",
    "AC7": "oracle and constant mock closure",
    "AC8": "EQV <= STX <= 100% in every report cell",
    "AC9": "context pruning sets and token budgets",
    "AC10": "generation determinism and seed sensitivity",
}
_ac_outcomes: dict[str, list[str]] = {}


def design_files() -> list[Path]:
    return sorted(DESIGNS.glob("*.sv"))


@pytest.fixture(scope="session")
def designs() -> list[Path]:
    return design_files()


def _criterion(nodeid: str) -> str | None:
    if "test_acceptance.py" not in nodeid:
        return None
    name = nodeid.split("::")[-1]
    if not name.startswith("test_ac"):
        return None
    num = name[len("test_ac"):].split("_")[0]
    return f"AC{num}"


def pytest_runtest_logreport(report):
    ac = _criterion(report.nodeid)
    if ac is None:
        return
    if report.when == "call" or report.outcome != "passed":
        _ac_outcomes.setdefault(ac, []).append(report.outcome)


def pytest_terminal_summary(terminalreporter):
    if not _ac_outcomes:
        return
    terminalreporter.section("acceptance criteria")
    for ac in sorted(_ac_outcomes, key=lambda a: int(a[2:])):
        outcomes = _ac_outcomes[ac]
        verdict = "PASS" if all(o == "passed" for o in outcomes) else "FAIL"
        terminalreporter.write_line(f"{ac:<5} {verdict}  {_AC_TITLES.get(ac, '')}")
