import support


def pytest_terminal_summary(terminalreporter):
    if not support.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(support.RESULTS):
        ok, detail = support.RESULTS[number]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'} criterion {number}: {detail}")
