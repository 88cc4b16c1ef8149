import pytest

_KEY = pytest.StashKey[dict]()


def pytest_configure(config):
    config.stash[_KEY] = {}


@pytest.fixture
def record_criterion(request):
    """Record ``(number, passed, detail)`` for the end-of-run acceptance summary."""
    store = request.config.stash[_KEY]

    def record(number, passed, detail):
        store[number] = (passed, detail)

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    store = config.stash.get(_KEY, {})
    if not store:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(store):
        passed, detail = store[n]
        terminalreporter.write_line(f"CRITERION {n}: {'PASS' if passed else 'FAIL'} - {detail}")
