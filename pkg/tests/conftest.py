import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

_VERDICTS = pytest.StashKey[dict]()


@pytest.fixture
def verdict(request):
    """Record and print one acceptance line: verdict(n, ok, detail)."""
    store = request.config.stash.setdefault(_VERDICTS, {})
    capman = request.config.pluginmanager.getplugin("capturemanager")

    def record(n, ok, detail=""):
        line = f"AC{n:<2} {'PASS' if ok else 'FAIL'}  {detail}"
        store[n] = line
        with capman.global_and_fixture_disabled():
            print(f"\n{line}")
        return ok

    return record


def pytest_terminal_summary(terminalreporter, config):
    store = config.stash.get(_VERDICTS, {})
    if store:
        terminalreporter.section("acceptance criteria")
        for n in sorted(store):
            terminalreporter.write_line(store[n])
