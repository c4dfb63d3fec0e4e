import re


def pytest_terminal_summary(terminalreporter):
    """One PASS/FAIL line per acceptance criterion, in criterion order."""
    outcomes = {}
    for status in ("passed", "failed", "error"):
        for rep in terminalreporter.stats.get(status, []):
            if rep.when != "call" and status != "error":
                continue
            m = re.search(r"test_criterion_(\d+)_(\w+)", rep.nodeid)
            if m:
                outcomes[int(m.group(1))] = (m.group(2), "PASS" if status == "passed" else "FAIL")
    if not outcomes:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(outcomes):
        name, verdict = outcomes[n]
        terminalreporter.write_line(f"criterion {n} {verdict}  {name}")
