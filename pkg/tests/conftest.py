import datetime as dt

import numpy as np
import pytest

from stylefacts.garch import GarchParams, garch_simulate
from stylefacts.series import PriceSeries, business_days, prices_from_returns

TRUE_GARCH = GarchParams(0.1, 0.1, 0.8)


def make_prices(values, start=dt.date(2001, 1, 2), instrument="test"):
    return PriceSeries(instrument, business_days(start, len(values)), values)


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


@pytest.fixture(scope="session")
def garch_returns():
    """IPC-sized GARCH(1,1) path at the reference parameters."""
    return garch_simulate(TRUE_GARCH, 3746, seed=11)


@pytest.fixture(scope="session")
def garch_prices(garch_returns):
    return prices_from_returns(garch_returns)


ACCEPTANCE = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
