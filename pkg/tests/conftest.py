def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """Echo the collected acceptance pass/fail lines after the run."""
    try:
        from _support import ACCEPTANCE_LINES
    except ImportError:
        return
    if ACCEPTANCE_LINES:
        terminalreporter.write_sep("-", "acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
