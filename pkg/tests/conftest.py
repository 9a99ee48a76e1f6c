import pytest
from hypothesis import HealthCheck, settings

from fenand import cell as C
from fenand import electrostatics as E

settings.register_profile("default", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

# Filled by test_acceptance; printed once at the end of the session.
ACCEPTANCE_LINES = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[k])


@pytest.fixture(scope="session")
def device():
    return C.default_device()


@pytest.fixture(scope="session")
def vertical_device():
    return C.default_device(E.vertical_dual_port_stack())
