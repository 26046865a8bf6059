"""Collects acceptance-criterion outcomes and prints one line per criterion."""

import pytest

_OUTCOMES = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion covered by the test")


@pytest.fixture
def note(request):
    """Attach a one-line measurement summary to the criterion report."""
    def record(text):
        request.node.user_properties.append(("note", str(text)))
    return record


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return
    if rep.when == "call" or (rep.when == "setup" and not rep.passed):
        number, title = mark.args
        notes = "; ".join(v for k, v in item.user_properties if k == "note")
        _OUTCOMES[number] = (title, rep.passed, notes)


def pytest_terminal_summary(terminalreporter):
    if not _OUTCOMES:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for number in sorted(_OUTCOMES):
        title, passed, notes = _OUTCOMES[number]
        line = f"criterion {number:2d} {'PASS' if passed else 'FAIL'}  {title}"
        tr.write_line(line + (f"  [{notes}]" if notes else ""))
