import os
import sys

import numpy as np
import pytest
from hypothesis import settings

SEED = int(os.environ.get("PARKPLAN_SEED", "0"))

settings.register_profile("parkplan", deadline=None, max_examples=60, derandomize=True)
settings.load_profile("parkplan")


@pytest.fixture
def rng():
    """Randomized fixtures draw from here; PARKPLAN_SEED changes the stream."""
    return np.random.default_rng(SEED)


@pytest.fixture(scope="session", autouse=True)
def _warm_kernels():
    from parkplan import _kernels
    _kernels.warmup()


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for name in sorted(mod.RESULTS):
        terminalreporter.write_line(mod.RESULTS[name])
