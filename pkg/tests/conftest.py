import json
from pathlib import Path

import pytest

from vapordet.model import paper_design

GOLDEN = Path(__file__).parent / "golden"


@pytest.fixture(scope="session")
def design():
    # frozen dataclass, safe to share
    return paper_design()


@pytest.fixture(scope="session")
def golden():
    return json.loads((GOLDEN / "paper_design.json").read_text())


@pytest.fixture(scope="session")
def markov_regime():
    return json.loads((GOLDEN / "markov_regime.json").read_text())


# one line per acceptance criterion, printed after the run
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
