import pytest

_ACCEPTANCE = []


@pytest.fixture
def acceptance_log(capsys):
    """Write a line to the terminal while the test runs and keep it for the summary."""

    def log(line):
        _ACCEPTANCE.append(line)
        with capsys.disabled():
            print("\n" + line)

    return log


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_ACCEPTANCE, key=lambda s: int(s.split("criterion")[1].split(":")[0])):
            terminalreporter.write_line(line)
