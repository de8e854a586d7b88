import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from aktlr.synthetic import write_fixture  # noqa: E402

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def fixture_dir(tmp_path):
    paths = write_fixture(tmp_path / "fx", seed=0)
    return paths


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
