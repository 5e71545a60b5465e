import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from dpcollapse.distributions import DistributionModel  # noqa: E402
from dpcollapse.units import CHARGE, CONSTANTS, LENGTH, MASS, Quantity  # noqa: E402


def kg(v):
    return Quantity(v, MASS)


def metres(v):
    return Quantity(v, LENGTH)


def coulombs(v):
    return Quantity(v, CHARGE)


@pytest.fixture
def unit_sphere():
    return DistributionModel.uniform_sphere(metres(1.0), kg(1.0))


@pytest.fixture
def unit_gaussian():
    return DistributionModel.gaussian(metres(1.0), kg(1.0))


@pytest.fixture
def ion():
    return DistributionModel.gaussian(metres(1e-8), kg(1e-23), CONSTANTS.elementary_charge)


_acceptance: list[tuple[str, str]] = []


def pytest_runtest_logreport(report):
    if report.when == "call" and "acceptance" in report.keywords:
        doc = getattr(report, "criterion", None) or report.nodeid.split("::")[-1]
        _acceptance.append((doc, report.outcome.upper()))


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker is not None:
        rep.criterion = marker.args[0] if marker.args else item.name


def pytest_terminal_summary(terminalreporter):
    if not _acceptance:
        return
    terminalreporter.section("acceptance criteria")
    for name, outcome in _acceptance:
        terminalreporter.write_line(f"{'PASS' if outcome == 'PASSED' else 'FAIL'}  {name}")
