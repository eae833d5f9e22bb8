import numpy as np
import pytest

# acceptance criterion number -> (title, list of test outcomes)
_CRITERIA: dict = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): test belongs to an acceptance criterion")


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return
    num, title = mark.args
    entry = _CRITERIA.setdefault(num, [title, []])
    if rep.when == "call" or (rep.when == "setup" and not rep.passed):
        entry[1].append((item.name, rep.passed))


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(_CRITERIA):
        title, results = _CRITERIA[num]
        ok = bool(results) and all(p for _, p in results)
        failed = [n for n, p in results if not p]
        extra = f" (failed: {', '.join(failed)})" if failed else ""
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'} #{num:<2} {title}{extra}")
