import os

import pytest

from spectral_orbit.curve_core import CurveSpec, validate_curve
from spectral_orbit.sampling import make_rng, random_definite_point
from spectral_orbit.theta_engine import JacobianPoint

os.environ.setdefault("SPECTRAL_ORBIT_QUIET", "1")

K3_X = (0.0, 0.4, -0.3)
K3_Z = (1.0, -0.8 + 0.9j, -0.5 - 1.1j)


@pytest.fixture
def c2_spec():
    return CurveSpec(((0.0, -0.5), (0.0, 0.5)))


@pytest.fixture
def c2_table(c2_spec):
    return validate_curve(c2_spec)


@pytest.fixture
def baseline():
    """γ = 0.5 on the C2 curve."""
    return JacobianPoint.from_ratios([[1.0, 0.5], [1.0, 1.0]])


@pytest.fixture(scope="session")
def k3_table():
    return validate_curve(CurveSpec.from_arrays(K3_X, K3_Z))


@pytest.fixture(scope="session")
def k3_massless_table():
    return validate_curve(CurveSpec.from_arrays((0.0, 0.0, 0.0), K3_Z))


@pytest.fixture(scope="session")
def k3_point(k3_table):
    return random_definite_point(make_rng(7), k3_table)


@pytest.fixture(scope="session")
def k3_massless_point(k3_massless_table):
    return random_definite_point(make_rng(11), k3_massless_table)
