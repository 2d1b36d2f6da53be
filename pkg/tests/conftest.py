import logging

import numpy as np
import pytest

from fx_tails.pipeline import AnalysisConfig, run_analysis


@pytest.fixture(scope="session")
def bundled_report():
    """One full run over the bundled 75-currency panel, shared across tests."""
    logging.getLogger("fx_tails").setLevel(logging.ERROR)
    return run_analysis(AnalysisConfig())


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


_ACCEPTANCE: dict[str, tuple[bool, str]] = {}


@pytest.fixture
def acceptance():
    """Record one PASS/FAIL line for an acceptance criterion; returns the verdict."""
    def record(key: str, ok: bool, detail: str) -> bool:
        _ACCEPTANCE[key] = (bool(ok), detail)
        print(f"{'PASS' if ok else 'FAIL'}  {key}: {detail}")
        return bool(ok)
    return record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(_ACCEPTANCE, key=lambda k: (len(k.split()[0]), k)):
        ok, detail = _ACCEPTANCE[key]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {key}: {detail}")
