import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from wifi_rta.model import AnalyticModel  # noqa: E402
from wifi_rta.params import EdcaParams, RtaParams, Scenario, us_to_ns  # noqa: E402

ACCEPTANCE_LINES: list[str] = []


def scenario(txop_us=5000.0, sigma_us=100.0, N=10, D_max_us=1000.0, **rta):
    from wifi_rta.params import QoS
    return Scenario(legacy=EdcaParams(txop_limit=us_to_ns(txop_us)),
                    rta=RtaParams(sigma=us_to_ns(sigma_us), **rta), N=N,
                    qos=QoS(D_max=us_to_ns(D_max_us)))


@pytest.fixture(scope="session")
def default_model():
    return AnalyticModel(Scenario())


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
