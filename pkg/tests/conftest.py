import pytest

# (criterion number, title, passed, detail) appended by tests/test_acceptance.py
ACCEPTANCE = []


def record(number: int, title: str, passed: bool, detail: str = "") -> bool:
    ACCEPTANCE.append((number, title, bool(passed), detail))
    print(f"criterion {number:2d} {'PASS' if passed else 'FAIL'}: {title} {detail}")
    return bool(passed)


@pytest.fixture()
def criterion():
    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number, title, passed, detail in sorted(ACCEPTANCE, key=lambda r: r[0]):
        terminalreporter.write_line(f"[{'PASS' if passed else 'FAIL'}] {number:2d}. {title}: {detail}")
