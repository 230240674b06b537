import sys

import pytest

from pslip import OscParams, WellGeometry


@pytest.fixture(scope="session")
def params03():
    return OscParams(delta=0.3, lam=0.5, g=1.0, kappa=1e-3, n_B=0.0)


@pytest.fixture(scope="session")
def geo03(params03):
    return WellGeometry(params03, 64)


@pytest.fixture(scope="session")
def geo_neg():
    return WellGeometry(OscParams(delta=-0.4, lam=0.5, g=1.0, kappa=1e-3, n_B=0.0), 64)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance") or sys.modules.get("tests.test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(mod.RESULTS):
        terminalreporter.write_line(mod.RESULTS[k][1])
