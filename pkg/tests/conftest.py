import pytest

ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)


@pytest.fixture
def record_criterion():
    def record(number: int, name: str, ok: bool, detail: str = "") -> None:
        line = f"criterion {number}: {'PASS' if ok else 'FAIL'} {name}" + (f" [{detail}]" if detail else "")
        ACCEPTANCE_LINES.append(line)
        print(line)

    return record
