import sys

N_CRITERIA = 10


def pytest_terminal_summary(terminalreporter):
    module = sys.modules.get("test_acceptance") or sys.modules.get("tests.test_acceptance")
    if module is None:
        return
    ran = {int(r.nodeid.split("criterion_")[1][:2])
           for key in ("passed", "failed", "error")
           for r in terminalreporter.stats.get(key, [])
           if "test_acceptance" in r.nodeid and "criterion_" in r.nodeid and r.when == "call"}
    if not ran:
        return
    terminalreporter.section("acceptance criteria")
    for number in range(1, N_CRITERIA + 1):
        if number in module.RESULTS:
            terminalreporter.write_line(module.RESULTS[number])
        elif number in ran:
            terminalreporter.write_line(
                f"FAIL criterion {number}: raised before recording a result")
