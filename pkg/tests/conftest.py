import pytest

TEST_QUERY = """REGISTER QUERY TestQuery AS
SELECT ?obs
FROM STREAM streams [ RANGE 5s STEP 5s ]
WHERE { ?obs observedProperty AirTemperature. }
"""


@pytest.fixture
def test_query_text() -> str:
    return TEST_QUERY


# Acceptance verdicts, one line per criterion, repeated at the end of the run.
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
