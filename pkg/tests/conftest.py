import os

from hypothesis import HealthCheck, settings

settings.register_profile(
    "default",
    max_examples=40,
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
    derandomize=True,
)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


import re

import pytest

_ACCEPTANCE: list[str] = []


@pytest.fixture
def criterion(request):
    """Record one PASS/FAIL line for an acceptance criterion.

    Call ``criterion(label, ok, detail)``; a test that raises before
    recording is reported as FAIL.
    """
    seen = []

    def record(label, ok, detail=""):
        line = f"criterion {label}: {'PASS' if ok else 'FAIL'}  {detail}".rstrip()
        _ACCEPTANCE.append(line)
        seen.append(label)
        print(line)
        return ok

    yield record
    if not seen:
        m = re.search(r"criterion_(\w+?)_", request.node.name)
        label = m.group(1).lstrip("0") if m else request.node.name
        _ACCEPTANCE.append(f"criterion {label}: FAIL  (raised before completing)")


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE:
            terminalreporter.write_line(line)
