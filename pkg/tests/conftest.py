from __future__ import annotations

import sys
from pathlib import Path

import pytest

FIXTURES = Path(__file__).parent / "fixtures"

sys.path.insert(0, str(Path(__file__).parent))


@pytest.fixture
def fixtures() -> Path:
    return FIXTURES


# ---------------------------------------------------------------- acceptance report

CRITERIA: dict[int, tuple[str, str, str]] = {}


class _Criterion:
    def __init__(self, number: int, title: str):
        self.number, self.title, self.detail = number, title, ""

    def __enter__(self):
        return self

    def __exit__(self, kind, exc, tb):
        if kind is None:
            status = "PASS"
        elif issubclass(kind, pytest.skip.Exception):
            status, self.detail = "SKIP", str(exc)
        else:
            status = "FAIL"
            self.detail = f"{self.detail} {kind.__name__}: {str(exc).splitlines()[0] if str(exc) else ''}".strip()
        CRITERIA[self.number] = (status, self.title, self.detail)
        return False


@pytest.fixture
def criterion():
    return _Criterion


def pytest_terminal_summary(terminalreporter):
    if not CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(CRITERIA):
        status, title, detail = CRITERIA[n]
        terminalreporter.write_line(f"criterion {n}: {status} {title}" + (f" ({detail})" if detail else ""))
