import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from dctlm.numerics import config  # noqa: E402

ACCEPTANCE = {}


@pytest.fixture(autouse=True)
def _float64_default():
    config.set_dtype("float64")
    config.set_debug(False)
    yield
    config.set_dtype("float64")
    config.set_debug(False)


@pytest.fixture
def record_criterion():
    """Call with (number, title, passed, detail) from acceptance tests."""
    def record(number, title, passed, detail=""):
        ACCEPTANCE[number] = (title, bool(passed), detail)
    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        title, passed, detail = ACCEPTANCE[number]
        status = "PASS" if passed else "FAIL"
        terminalreporter.write_line(f"[{status}] {number}. {title}  {detail}")
