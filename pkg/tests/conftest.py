import os

import pytest
from hypothesis import HealthCheck, settings

from topofano import preset_paper

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


@pytest.fixture(scope="session")
def preset():
    return preset_paper()


@pytest.fixture(scope="session")
def cfg(preset):
    return preset[0]


@pytest.fixture(scope="session")
def res(preset):
    return preset[1]


def pytest_configure(config):
    import time
    config._topofano_t0 = time.time()
    config.addinivalue_line("markers", "run_last: keep this test at the end of the session")


def pytest_collection_modifyitems(session, config, items):
    last = [it for it in items if it.get_closest_marker("run_last")]
    items[:] = [it for it in items if not it.get_closest_marker("run_last")] + last


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    import sys
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "REPORT", []) if mod else []
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split("criterion")[1].split(":")[0])):
            terminalreporter.write_line(line)
