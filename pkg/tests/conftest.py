import sys
from pathlib import Path

import pytest
from hypothesis import settings

from detflow import _backend

sys.path.insert(0, str(Path(__file__).parent))

settings.register_profile("default", max_examples=60, deadline=None)
settings.load_profile("default")

ACCEPTANCE = []


@pytest.fixture(params=_backend.available())
def backend(request):
    with _backend.use(request.param):
        yield request.param


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    criterion = getattr(item.function, "criterion", None)
    if criterion is not None and (rep.when == "call" or rep.failed):
        if rep.when == "call" or not any(c[0] == criterion[0] for c in ACCEPTANCE):
            ACCEPTANCE.append((criterion[0], criterion[1], rep.outcome))


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number, text, outcome in sorted(ACCEPTANCE):
        mark = "PASS" if outcome == "passed" else "FAIL"
        terminalreporter.write_line(f"{mark} criterion {number:>2}: {text}")
