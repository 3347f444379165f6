import numpy as np
import pytest

import pointdirac as pd
from pointdirac.models import ScalarReduction

# one representative parameter set per built-in family
BUILTIN_FIXTURES = [
    ("constant_linear", [0.5, -0.3, 0.2, 0.1]),
    ("gesztesy_seba_plus", [1.0, 0.5]),
    ("gesztesy_seba_minus", [1.0, 0.5]),
    ("identity_form", [1.0, 1]),
    ("sigma1_form", [0.8, 1]),
    ("sigma2_form", [0.8, 1]),
    ("soler_form", [1.0, 1]),
    ("bragg_resonance", [1.0]),
    ("gross_neveu", []),
]

GENERIC_WEIGHTS = np.array([0.8, 0.35 + 0.2j])


def sample_spinors(n, radius=10.0, seed=1234):
    rng = np.random.default_rng(seed)
    pts = rng.standard_normal((n, 4))
    pts /= np.linalg.norm(pts, axis=1, keepdims=True)
    pts *= radius * rng.uniform(0.0, 1.0, (n, 1)) ** 0.25
    return pts[:, 0] + 1j * pts[:, 1], pts[:, 2] + 1j * pts[:, 3]


def spinor_samples(n, radius=10.0, seed=1234):
    z1, z2 = sample_spinors(n, radius, seed)
    return [np.array([a, b]) for a, b in zip(z1, z2)]


def violator_alpha(x, kappa=8.0):
    return kappa / (1.0 + x) ** 2


def violator_model(with_reduction, constants=pd.NATURAL_UNITS):
    """A(z) = 8 (1 + |z|^2)^-2 * 1: the slope of a(x) x dips below -4 c^2."""
    kappa = 8.0

    def a_fn(z):
        return violator_alpha(float(np.vdot(z, z).real), kappa) * pd.ID2

    sr = None
    if with_reduction:
        c2 = 4.0 * constants.c**2
        a_of_x = lambda x: violator_alpha(x, kappa) ** 2
        sr = ScalarReduction(
            m_form=pd.ID2,
            coupling=lambda x: violator_alpha(x, kappa) * pd.ID2,
            a_of_x=a_of_x,
            scalar_map=lambda x: x * (1.0 + a_of_x(x) / c2),
        )
    return pd.NonlinearModel(
        evaluate_A=a_fn, constants=constants, scalar_reduction=sr,
    )


@pytest.fixture(scope="session")
def gaussian_phi():
    return pd.gaussian_profile([1.0, 0.0])


@pytest.fixture(scope="session")
def gn_model():
    return pd.builtin_model("gross_neveu")


@pytest.fixture(scope="session")
def gn_datum(gn_model, gaussian_phi):
    return pd.make_domain_datum(gn_model, gaussian_phi)


@pytest.fixture(scope="session")
def gn_traj(gn_model, gn_datum):
    return pd.march_charge(gn_model, gn_datum, T=0.5, dt=1e-3)


def make_builtin(family, params, constants=pd.NATURAL_UNITS):
    return pd.builtin_model(family, params, constants)


def builtin_datum(model, weights=GENERIC_WEIGHTS):
    phi = pd.gaussian_profile(weights)
    return pd.make_domain_datum(model, phi)
