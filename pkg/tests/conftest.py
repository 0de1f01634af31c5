import sys


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    # acceptance criteria report their verdict lines here so they stay
    # visible even when pytest captures stdout
    mod = sys.modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None) if mod else None
    if results:
        terminalreporter.section("acceptance criteria")
        for line in results:
            terminalreporter.write_line(line)
