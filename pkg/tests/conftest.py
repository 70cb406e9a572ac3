import os
import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from treenoise import embedded_liver_sample  # noqa: E402

DATA = Path(__file__).parent / "data"

# criterion number -> list of (passed, description)
ACCEPTANCE: dict[str, list[tuple[str, str]]] = {}


@pytest.fixture
def liver():
    return embedded_liver_sample()


@pytest.fixture
def record_criterion():
    def record(number, description, passed):
        # passed=None marks a criterion that could not be run
        status = "SKIP" if passed is None else "PASS" if passed else "FAIL"
        ACCEPTANCE.setdefault(str(number), []).append((status, description))
        return passed

    return record


def car_path():
    env = os.environ.get("TREENOISE_CAR_CSV")
    if env:
        return Path(env)
    candidate = DATA / "car.csv"
    return candidate if candidate.exists() else None


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE, key=lambda k: (len(k), k)):
        for status, description in ACCEPTANCE[number]:
            terminalreporter.write_line(f"[{status}] criterion {number}: {description}")
