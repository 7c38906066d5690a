from contextlib import contextmanager

import pytest

_RESULTS = pytest.StashKey[dict]()


def pytest_configure(config):
    config.stash[_RESULTS] = {}


@pytest.fixture
def criterion(request):
    """Record one acceptance criterion's outcome for the terminal summary."""
    results = request.config.stash[_RESULTS]

    @contextmanager
    def record(number, title):
        results[number] = (title, False)
        yield
        results[number] = (title, True)

    return record


def pytest_terminal_summary(terminalreporter, config):
    results = config.stash.get(_RESULTS, {})
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(results):
        title, ok = results[number]
        terminalreporter.write_line(f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {title}")
