import pytest

from ba137sim.dynamics import AcLineParams, PhysicsParams, PumpParams
from ba137sim.levels import build_ground_manifold
from ba137sim.readout import DetectionParams

# knob values frozen by the packaged recipes (see src/ba137sim/recipes)
CAL_DARK_RATE = 375.625
CAL_POL_IMPURITY = 1.09100341796875e-02
CAL_TAU_GAUSS = 1.2219238281250001e-04
CAL_AC_AMPLITUDE = 117187.5


@pytest.fixture(scope="session")
def manifold():
    return build_ground_manifold(8.9)


@pytest.fixture()
def quiet_physics():
    """All noise off: exact closed-form behavior everywhere."""
    return PhysicsParams(
        laser_linewidth=0.0,
        mag_detuning_rms=0.0,
        ac_line=AcLineParams(detuning_amplitude=0.0),
        pump=PumpParams(scatter_rate=1e6, pol_impurity=0.0, duration=100e-6),
        detection=DetectionParams(2100.0, 0.0, 10e-3, 35.0),
    )


@pytest.fixture()
def calibrated_physics():
    """The fig4/fig5 operating point with every calibrated knob applied."""
    return PhysicsParams(
        tau_gauss=CAL_TAU_GAUSS,
        laser_linewidth=10e3,
        mag_detuning_rms=3e3,
        ac_line=AcLineParams(60.0, CAL_AC_AMPLITUDE, 0.0),
        pump=PumpParams(1e6, CAL_POL_IMPURITY, 100e-6),
        detection=DetectionParams(2100.0, CAL_DARK_RATE, 10e-3, 35.0),
    )
