import pytest

from ratioreg.commands import SEED_ENV

_ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(autouse=True)
def _no_seed_override(monkeypatch):
    monkeypatch.delenv(SEED_ENV, raising=False)


@pytest.fixture
def verdict():
    """Record one PASS/FAIL line; also printed so ``-s`` shows it inline."""

    def record(number: int, passed: bool, detail: str) -> bool:
        line = f"criterion {number}: {'PASS' if passed else 'FAIL'}  {detail}"
        _ACCEPTANCE_LINES.append(line)
        print(line)
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
