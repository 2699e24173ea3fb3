"""Shared fixtures.

The full default-grid pipeline run is expensive (seconds), so it is built
once per session and shared by every test that inspects its observables.
Small-grid fixtures cover the fast unit and property tests.
"""

import numpy as np
import pytest

from tkamhhg.config import RunConfig
from tkamhhg.driver import evaluate_driver
from tkamhhg.pipeline import execute


def small_config(**overrides) -> RunConfig:
    """Reduced grids: same physics, ~10x cheaper than the defaults."""
    cfg = RunConfig()
    cfg.grids.n_r = 48
    cfg.grids.n_theta = 64
    for dotted, value in overrides.items():
        section, key = dotted.split("__")
        setattr(getattr(cfg, section), key, value)
    cfg.validate()
    return cfg


@pytest.fixture(scope="session")
def default_run():
    """Full default-grid pipeline result (the acceptance workhorse)."""
    return execute(RunConfig())


@pytest.fixture(scope="session")
def small_run():
    return execute(small_config())


@pytest.fixture(scope="session")
def small_field():
    cfg = small_config()
    return evaluate_driver(cfg.driver_spec(), cfg.transverse_grid(),
                           cfg.time_grid())


@pytest.fixture()
def rng():
    return np.random.default_rng(20260824)
