import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from fixture_dataset import build_fixture_dataset  # noqa: E402


@pytest.fixture(scope="session")
def fixture_manifest(tmp_path_factory):
    return build_fixture_dataset(tmp_path_factory.mktemp("fixture"))


def pytest_terminal_summary(terminalreporter):
    acceptance = sys.modules.get("test_acceptance")
    if acceptance is None or not acceptance.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in acceptance.RESULTS:
        terminalreporter.write_line(line)
