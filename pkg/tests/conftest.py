import pytest

# filled by tests/test_acceptance.py: criterion number -> (passed, name, detail)
ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, name, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n}: {'PASS' if ok else 'FAIL'}  {name}  ({detail})")


@pytest.fixture
def record_criterion():
    def record(n, ok, name, detail=""):
        ACCEPTANCE[n] = (bool(ok), name, detail)
        print(f"criterion {n}: {'PASS' if ok else 'FAIL'}  {name}  ({detail})")
        return ok
    return record
