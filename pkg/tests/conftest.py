import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).resolve().parent))

_results: list[tuple[str, str, str]] = []


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker is None or report.when != "call":
        return
    label = marker.args[0] if marker.args else item.name
    detail = getattr(item, "acceptance_detail", "")
    _results.append(("PASS" if report.passed else "FAIL", label, detail))


@pytest.fixture
def detail(request):
    """Attach a one-line measurement to the acceptance summary."""

    def record(text: str):
        request.node.acceptance_detail = text

    return record


def pytest_terminal_summary(terminalreporter):
    if not _results:
        return
    terminalreporter.section("acceptance criteria")
    for status, label, info in _results:
        terminalreporter.write_line(f"{status}  {label}" + (f"  ({info})" if info else ""))
