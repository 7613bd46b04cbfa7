"""Per-criterion PASS/FAIL lines for the acceptance suite."""

_criteria = {}   # number -> name
_owner = {}      # nodeid -> number
_outcome = {}    # number -> list of bools


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, name): acceptance criterion checked by the test")


def pytest_collection_modifyitems(items):
    for item in items:
        mark = item.get_closest_marker("criterion")
        if mark is not None:
            number, name = mark.args
            _criteria[number] = name
            _owner[item.nodeid] = number


def pytest_runtest_logreport(report):
    number = _owner.get(report.nodeid)
    if number is None:
        return
    if report.when == "call" or report.failed:
        _outcome.setdefault(number, []).append(report.passed)


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_criteria):
        results = _outcome.get(number)
        if not results:
            status = "SKIP"
        else:
            status = "PASS" if all(results) else "FAIL"
        terminalreporter.write_line(f"{status} {number:>2} {_criteria[number]}")
