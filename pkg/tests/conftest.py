import os

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from radnodal import ProblemSpec, SolverConfig

settings.register_profile(
    "radnodal", deadline=None, max_examples=30,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.function_scoped_fixture])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "radnodal"))


@pytest.fixture(scope="session")
def soliton_spec():
    # p=2, N=1, f=u^3: ground state sqrt(2) sech(r), half-line energy 2/3
    return ProblemSpec.power(2.0, 1, 4.0, r_max=40.0)


@pytest.fixture(scope="session")
def spec3d():
    return ProblemSpec.power(2.0, 3, 4.0, r_max=20.0)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def fast_config():
    return SolverConfig(grid=1000)


# acceptance criteria report one line each; collected here and echoed in the
# terminal summary so they survive output capture
_ACCEPTANCE = pytest.StashKey[dict]()


def pytest_configure(config):
    config.stash[_ACCEPTANCE] = {}


@pytest.fixture
def criterion(request):
    lines = request.config.stash[_ACCEPTANCE]

    def record(number: int, ok: bool, text: str) -> None:
        line = f"criterion {number} {'PASS' if ok else 'FAIL'}: {text}"
        lines[number] = line
        print(line)

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_ACCEPTANCE, {})
    if lines:
        terminalreporter.section("acceptance criteria")
        for n in sorted(lines):
            terminalreporter.write_line(lines[n])
