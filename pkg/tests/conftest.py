import re

_CRITERION = re.compile(r"test_acceptance\.py::test_criterion_(\d+)")
_outcomes: dict[int, str] = {}


def pytest_runtest_logreport(report):
    m = _CRITERION.search(report.nodeid)
    if not m:
        return
    n = int(m.group(1))
    if report.when == "call" or report.outcome != "passed":
        # A setup or teardown failure also sinks the criterion.
        if _outcomes.get(n) != "FAIL":
            _outcomes[n] = "PASS" if report.outcome == "passed" else "FAIL"


def pytest_terminal_summary(terminalreporter):
    if not _outcomes:
        return
    from test_acceptance import DETAILS

    terminalreporter.section("acceptance criteria")
    for n in sorted(_outcomes):
        extra = DETAILS.get(n, "")
        terminalreporter.write_line(f"{_outcomes[n]} criterion {n}" + (f"  {extra}" if extra else ""))
