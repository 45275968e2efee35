import pytest

from wormgait import TABLE1, ActuationParams, EnergyParams, GaitParams, MarginSetting, simulate, synthetic_campaign


@pytest.fixture(scope="session")
def reference_gait():
    return GaitParams(0.07, 0.2)


@pytest.fixture(scope="session")
def reference_run(reference_gait):
    """Built-in robot on the reference gait at zero margin over five cycles."""
    return simulate(reference_gait, TABLE1, ActuationParams(), MarginSetting(0.0))


@pytest.fixture(scope="session")
def reference_logs(reference_gait):
    return synthetic_campaign(reference_gait, TABLE1, ActuationParams(), EnergyParams())
