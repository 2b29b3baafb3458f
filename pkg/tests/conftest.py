import time

import pytest

ACCEPTANCE: dict[int, tuple[bool, str]] = {}
_T0 = time.perf_counter()
SUITE_LIMIT_S = 120.0


@pytest.fixture
def record():
    """Store one acceptance verdict: ``record(n, ok, detail)``."""

    def _record(n: int, ok: bool, detail: str):
        ACCEPTANCE[n] = (ok, detail)
        print(f"criterion {n}: {'PASS' if ok else 'FAIL'} {detail}")

    return _record


def pytest_terminal_summary(terminalreporter):
    elapsed = time.perf_counter() - _T0
    if not ACCEPTANCE:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[n]
        tr.write_line(f"criterion {n}: {'PASS' if ok else 'FAIL'} {detail}")
    tr.write_line(f"suite runtime: {'PASS' if elapsed < SUITE_LIMIT_S else 'FAIL'} {elapsed:.1f} s (limit {SUITE_LIMIT_S:.0f} s)")


def pytest_sessionfinish(session, exitstatus):
    if ACCEPTANCE and time.perf_counter() - _T0 >= SUITE_LIMIT_S and exitstatus == 0:
        session.exitstatus = 1
