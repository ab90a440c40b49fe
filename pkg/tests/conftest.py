ACCEPTANCE_LINES: list = []


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance: full-scale acceptance criteria (several minutes)")


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
