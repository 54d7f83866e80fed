import random
import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from dslrs.params import setup  # noqa: E402


@pytest.fixture(scope="session")
def system():
    """16 registered users, 7-node k=4 dealer network, two signing scopes."""
    return setup(n_users=16, n_nodes=7, k=4, n_scopes=2, rng=random.Random(20240601))


@pytest.fixture
def rng():
    return random.Random(1234)


@pytest.fixture(scope="session")
def sid(system):
    return system.pp.catalog.signing_sids[0]


@pytest.fixture(scope="session")
def other_sid(system):
    return system.pp.catalog.signing_sids[1]


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
