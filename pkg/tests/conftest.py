import pytest

from scx.propagator import constant_model, scalar_model, two_level_model


@pytest.fixture
def scalar3():
    return scalar_model("const", 3.0, (0.0, 2.0), c=1.0)


@pytest.fixture
def two_level():
    return two_level_model(2.0, 1.0, 1.0, (0.0, 3.0))


@pytest.fixture
def all_families():
    """One model per family, including time-dependent profiles."""
    return {
        "scalar_const": scalar_model("const", 1.0, (0.0, 4.0), c=1.0),
        "scalar_poly": scalar_model("poly", 1.0, (0.0, 2.0), alpha=1.0),
        "scalar_gauss": scalar_model("gauss", 2.0, (-1.0, 2.0), beta=0.5),
        "two_level": two_level_model(2.0, 1.0, 1.0, (0.0, 3.0)),
        "two_level_driven": two_level_model(1.5, 1.0, 1.3, (0.0, 3.0), omega=2.0),
        "constant_3x3": constant_model(
            [[3, 1j, 0], [-1j, 2, 0.5], [0, 0.5, 1.5]], 0.8, (0.0, 2.0)
        ),
    }


_criteria: dict = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    if report.when == "call" or report.failed:
        number, title = marker.args
        previous = _criteria.get(number, (title, True))[1]
        _criteria[number] = (title, previous and not report.failed)


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for number in sorted(_criteria):
        title, ok = _criteria[number]
        terminalreporter.write_line(f"criterion {number}: {'PASS' if ok else 'FAIL'}  {title}")
