import pytest

_KEY = pytest.StashKey[list]()


@pytest.fixture
def criterion(request):
    """Record one acceptance verdict; the line is printed now and in the summary."""
    lines = request.config.stash.setdefault(_KEY, [])

    def record(num, ok, detail, elapsed=None, budget=None):
        if budget is not None and elapsed is not None and elapsed >= budget:
            ok = False
            detail += f"; runtime {elapsed:.1f}s exceeds {budget:g}s"
        t = "" if elapsed is None else f" [{elapsed:.1f}s]"
        line = f"criterion {num:2d}: {'PASS' if ok else 'FAIL'}{t} {detail}"
        lines.append((num, line))
        print(line)
        assert ok, line
    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_KEY, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(lines):
            terminalreporter.write_line(line)
