ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        status, title, detail = ACCEPTANCE[n]
        line = f"criterion {n:2d} {status}: {title}"
        terminalreporter.write_line(line + (f" ({detail})" if detail else ""))
