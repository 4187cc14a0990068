import numpy as np
import pytest

from etobs import (
    InputSignal,
    LtiPlant,
    SimConfig,
    build_battery_plant,
    iss_constants,
    params_from_gains,
    phev_profile,
    simulate,
)

BATTERY_L = np.array([[0.64], [2.33]])
BATTERY_Q = np.diag([100.0, 1000.0])


@pytest.fixture(scope="session")
def battery_plant():
    return build_battery_plant()


@pytest.fixture(scope="session")
def battery_cert(battery_plant):
    return iss_constants(battery_plant, BATTERY_L, BATTERY_Q, c=0.5)


@pytest.fixture(scope="session")
def battery_params(battery_cert):
    return params_from_gains(battery_cert, sigma=500.0, c1=1.0, c2=50.0,
                             c3=1.0, epsilon=1.0)


@pytest.fixture(scope="session")
def battery_profile():
    return phev_profile(1, 1500.0)


@pytest.fixture(scope="session")
def battery_arc(battery_plant, battery_cert, battery_params, battery_profile):
    cfg = SimConfig(t_end=1500.0, dt_max=0.05, eta0=1.0e6)
    return simulate(battery_plant, battery_cert, battery_params,
                    battery_profile, [1.0, 1.0], [1.0, 0.25], cfg)


@pytest.fixture(scope="session")
def ramp_setup():
    """Integrator plant whose output drifts at exactly unit rate.

    With a unit constant input the sampling error decreases at rate one,
    so with sigma = 0 transmissions occur exactly every sqrt(eps/gamma).
    """
    plant = LtiPlant(A=[[0.0]], B=[[1.0]], C=[[1.0]])
    cert = iss_constants(plant, [[1.0]], [[2.0]], c=0.5)  # alpha = gamma = 1
    params = params_from_gains(cert, sigma=0.0, c1=1.0, c2=0.0, c3=1.0,
                               epsilon=0.25)
    signal = InputSignal.constant([1.0])
    return plant, cert, params, signal


@pytest.fixture(scope="session")
def ramp_arc(ramp_setup):
    plant, cert, params, signal = ramp_setup
    cfg = SimConfig(t_end=10.0, dt_max=0.1, eta0=0.0)
    return simulate(plant, cert, params, signal, [0.0], [0.0], cfg)
