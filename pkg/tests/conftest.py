import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from myofield import (Config, cable, fieldsolver)  # noqa: E402


@pytest.fixture(scope="session")
def cfg():
    return Config()


@pytest.fixture(scope="session")
def rest_state(cfg):
    return cable.relax_to_rest(cfg.params, cfg.grid, cfg.solver)


@pytest.fixture(scope="session")
def ap_trace(cfg, rest_state):
    return cable.simulate_fiber(cfg.params, cfg.grid, cfg.solver,
                                initial=rest_state)


@pytest.fixture(scope="session")
def ap_spectrum(cfg, ap_trace):
    return fieldsolver.membrane_potential_spectrum(
        ap_trace, cfg.params, cfg.grid, cfg.solver)


@pytest.fixture(scope="session")
def template_spectrum(cfg):
    profile = fieldsolver.gaussian_template_profile(cfg.grid, amplitude=0.1,
                                                    width=1.0e-3)
    return fieldsolver.membrane_potential_spectrum(profile, cfg.params,
                                                   cfg.grid, cfg.solver)
