import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from boostesr.config import sim_config  # noqa: E402
from boostesr.sim import SimConfig, simulate_clean  # noqa: E402
from helpers import params  # noqa: E402


@pytest.fixture(scope="session")
def design_params():
    return params()


@pytest.fixture(scope="session")
def clean_cfg():
    return SimConfig()


@pytest.fixture(scope="session")
def hardware_cfg():
    return sim_config("hardware")


@pytest.fixture(scope="session")
def design_frame(design_params, clean_cfg):
    return simulate_clean(design_params, clean_cfg)


@pytest.fixture(scope="session")
def esr_frame(clean_cfg):
    return simulate_clean(params(c=99e-6, esr=0.2), clean_cfg)
