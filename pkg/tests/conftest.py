import math

import pytest

from photonfluid import theory
from photonfluid.meanfield import PhysicalParams

WAVELENGTH_CM = 780.24e-7
INTENSITY_CGS = 4.0e8          # 40 W/cm^2
BEAM_AREA_CM2 = 76.3254        # reproduces N0 ~ 8e11


@pytest.fixture(scope="session")
def cavity_params():
    """Rubidium-cavity defaults: L = 2 cm, R = 0.997, delta_n = 2e-6."""
    e0sq = 8.0 * math.pi * INTENSITY_CGS / theory.C_LIGHT
    return PhysicalParams(
        wavelength=WAVELENGTH_CM,
        cavity_length=2.0,
        mirror_reflectivity=0.997,
        n2=-2.0e-6 / e0sq,
        background_intensity=INTENSITY_CGS,
        detuning=0.0,
        beam_area=BEAM_AREA_CM2,
    )


@pytest.fixture(scope="session")
def quantum_params(cavity_params):
    n0 = theory.condensate_number(
        cavity_params.e0_squared, cavity_params.omega, cavity_params.v_cav)
    return theory.QuantumParams.paraxial(WAVELENGTH_CM, n0, cavity_params.v_cav)


@pytest.fixture(scope="session")
def kerr_kernel(cavity_params, quantum_params):
    return theory.interaction_from_kerr(cavity_params, quantum_params)
