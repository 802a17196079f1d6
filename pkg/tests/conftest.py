import sys
from pathlib import Path

import numpy as np
import pytest

_root = Path(__file__).resolve().parent.parent
if str(_root) not in sys.path:
    sys.path.append(str(_root))

from combs.comb_calculus import ModelParams  # noqa: E402


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: full-grid scans and large random suites")


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(params=[1, 2, 3, 4])
def params(request):
    return ModelParams(N=request.param)


@pytest.fixture
def tight_params():
    return ModelParams(N=1, kernel_tol=1e-18)
