import numpy as np
import pytest
from hypothesis import settings

from shadowlab.systems import make_system, parse_system_spec, two_point_identity

settings.register_profile("default", max_examples=60, deadline=None)
settings.load_profile("default")

CATALOG = ["identity2", "finite:1,2,0,3,3", "rotation:1/3", "rotation:golden", "rotation:0.3",
           "tent", "shift:2:16", "shift:3:8"]


def system(spec):
    return make_system(parse_system_spec(spec))


@pytest.fixture
def identity2():
    return two_point_identity()


@pytest.fixture
def shift():
    return system("shift:2:16")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# acceptance criteria report: one line per criterion, printed after the run
ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        terminalreporter.write_line(ACCEPTANCE[k])
