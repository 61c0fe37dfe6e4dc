import pytest

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def record_criterion():
    """Record one summary line per acceptance criterion and assert it."""

    def record(number, title, verdicts):
        ok = all(v.passed for v in verdicts)
        detail = "; ".join(f"{v.name} {'ok' if v.passed else 'FAILED'}: {v.detail}" for v in verdicts)
        line = f"criterion {number:>2} {title}: {'PASS' if ok else 'FAIL'} | {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        assert ok, line

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
