import numpy as np
import pytest

import kkt_audit

kkt_audit.install()


def pytest_collection_modifyitems(config, items):
    # acceptance checks run last so the suite-wide KKT audit sees every fit
    items.sort(key=lambda item: item.fspath.basename == "test_acceptance.py")


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
