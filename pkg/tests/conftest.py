import re

import pytest
from hypothesis import settings

settings.register_profile("default", deadline=None, max_examples=60)
settings.load_profile("default")

_CRITERIA: dict[int, tuple[str, str]] = {}


def pytest_runtest_logreport(report):
    match = re.search(r"test_acceptance\.py::test_criterion_(\d+)_(\w+)", report.nodeid)
    if not match:
        return
    idx = int(match.group(1))
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        _CRITERIA[idx] = (match.group(2), "PASS" if report.passed else "FAIL")


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for idx in sorted(_CRITERIA):
        name, verdict = _CRITERIA[idx]
        terminalreporter.write_line(f"criterion {idx} ({name}): {verdict}")


@pytest.fixture
def rng():
    import numpy as np

    return np.random.default_rng(12345)
