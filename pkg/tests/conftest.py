from __future__ import annotations

import numpy as np
import pytest

_ACCEPTANCE: dict[str, str] = {}


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(12345)


@pytest.fixture
def acceptance_line():
    """Record one PASS/FAIL line per acceptance criterion for the terminal summary."""

    def record(key: str, ok: bool, detail: str) -> bool:
        _ACCEPTANCE[key] = f"[{'PASS' if ok else 'FAIL'}] {key}: {detail}"
        print(_ACCEPTANCE[key])
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(_ACCEPTANCE, key=lambda k: int(k.split()[0][1:])):
        terminalreporter.write_line(_ACCEPTANCE[key])
