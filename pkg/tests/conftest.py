import pytest

from hypothesis import settings

settings.register_profile("default", max_examples=40, deadline=None)
settings.load_profile("default")

# criterion number -> (passed, detail), filled by tests/test_acceptance.py
ACCEPTANCE = {}
CRITERIA = {
    1: "MGF oracle equivalence",
    2: "recurrence dominance",
    3: "mixing time gives spectral expansion",
    4: "reversible expansion from mixing time",
    5: "contraction after T steps",
    6: "P/M operator inequalities",
    7: "two-state tightness",
    8: "split chain",
    9: "Monte-Carlo dominance",
    10: "continuous time",
    11: "CLI round-trip and determinism",
}


@pytest.fixture
def record():
    def _record(k, passed, detail=""):
        ACCEPTANCE[k] = (bool(passed), detail)
        return passed

    return _record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k, name in CRITERIA.items():
        if k in ACCEPTANCE:
            ok, detail = ACCEPTANCE[k]
            line = f"[{'PASS' if ok else 'FAIL'}] {k:2d}. {name}"
        else:
            line, detail = f"[----] {k:2d}. {name}", "not run"
        terminalreporter.write_line(f"{line}: {detail}" if detail else line)
