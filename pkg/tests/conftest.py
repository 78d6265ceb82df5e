import sys
from pathlib import Path

import pytest

# make tests/oracles.py importable as a plain module
sys.path.insert(0, str(Path(__file__).parent))


@pytest.fixture(scope="session")
def tables():
    from nematic_soh.gci import build_gci_table

    return {k: build_gci_table(k) for k in (0.5, 2.0, 10.0)}


@pytest.fixture(scope="session")
def coeffs2():
    from nematic_soh.coefficients import compute_coefficients

    return compute_coefficients(2.0)


# one line per acceptance criterion, repeated in the terminal summary
ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(scope="session")
def acceptance_lines():
    return ACCEPTANCE_LINES


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
