import numpy as np
import pytest

from noma_ee.channel import generate_scenario
from noma_ee.config import ScenarioConfig
from noma_ee.outage import compute_coefficients
from noma_ee.units import dbm_to_watts


@pytest.fixture
def default_config():
    return ScenarioConfig()


def draw_instance(seed, config: ScenarioConfig | None = None):
    """One realistic OutageCoefficients group drawn through the channel model."""
    config = config or ScenarioConfig()
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    scenario = generate_scenario(config, rng)
    return compute_coefficients(scenario.rsus[0], config), config


@pytest.fixture
def p_high_w(default_config):
    return dbm_to_watts(default_config.rsu_power_high_dbm)
