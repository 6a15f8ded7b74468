import sys
from pathlib import Path

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from mtdispatch.model import Scenario
from mtdispatch.scenario import default_scenario, table_one_devices

sys.path.insert(0, str(Path(__file__).parent))

settings.register_profile("repo", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("repo")

ACCEPTANCE_LINES: list[str] = []


def make_scenario(T=1, quiet=(), **series):
    """Scenario on the stock device table; series default to zero.

    ``quiet`` names devices whose output range collapses to {0}.
    """
    devs = table_one_devices()
    for name in quiet:
        dev = devs[name]
        if name in ("es", "ts"):
            dev.charge_max = dev.discharge_max = 0.0
        else:
            dev.p_min = 0.0
            dev.p_max = 0.0
    data = {k: np.zeros(T) for k in ("p_load", "h_load", "q_load", "p_wt_max", "p_pv_max", "price_grid", "price_gas")}
    data.update({k: np.broadcast_to(np.asarray(v, dtype=float), (T,)).copy() for k, v in series.items()})
    return Scenario(devices=devs, **data)


@pytest.fixture(scope="session")
def scenario():
    return default_scenario()


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
