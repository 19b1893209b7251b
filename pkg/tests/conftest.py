from pathlib import Path

import pytest

from outcomeval.evidence import load_corpus
from outcomeval.synthetic import bundled_path

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture(scope="session")
def fixtures_dir():
    return FIXTURES


@pytest.fixture(scope="session")
def synthetic_dir():
    return bundled_path()


@pytest.fixture(scope="session")
def synthetic_corpus(synthetic_dir):
    return load_corpus(synthetic_dir)


def pytest_terminal_summary(terminalreporter):
    import acceptance_log
    if acceptance_log.LINES:
        terminalreporter.section("acceptance criteria")
        for line in acceptance_log.LINES:
            terminalreporter.write_line(line)
