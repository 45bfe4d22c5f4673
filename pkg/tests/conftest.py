import numpy as np
import pytest

import qestgeo as qg
from qestgeo.hilbert import GridSpace, StateVector


def catalog_battery():
    """One instance of every catalog family, with its default sample grid."""
    return {
        "position_shift": qg.catalog(
            "position_shift", {"grid": {"n": 512, "lower": -10, "upper": 10}}
        ),
        "momentum_shift": qg.catalog(
            "momentum_shift", {"grid": {"n": 512, "lower": -10, "upper": 10}}
        ),
        "position_momentum_shift": qg.catalog(
            "position_momentum_shift", {"grid": {"n": 512, "lower": -10, "upper": 10}}
        ),
        "spin_jz": qg.catalog("spin_jz", {"amplitudes": [0.5, 2**-0.5, 0.5]}),
        "two_well": qg.catalog(
            "two_well", {"grid": {"n": 1024, "lower": -8, "upper": 8}}
        ),
        "ring_flux": qg.catalog("ring_flux", {"alpha": 0.3, "grid": {"n": 512}}),
        "bloch": qg.catalog("bloch"),
    }


@pytest.fixture(scope="session")
def battery():
    return catalog_battery()


@pytest.fixture(scope="session")
def gaussian_grid():
    return GridSpace(512, -10.0, 10.0)


@pytest.fixture(scope="session")
def pm_gaussian():
    return qg.catalog(
        "position_momentum_shift", {"grid": {"n": 512, "lower": -10, "upper": 10}}
    )


def random_state(space, rng):
    amp = rng.normal(size=space.dim) + 1j * rng.normal(size=space.dim)
    return StateVector(space, amp, normalize=True)


def random_unitary_family(dim, m, rng, fd_step=1e-5):
    """Smooth random model exp(-i sum theta_k H_k) psi0 on a basis space."""
    from scipy.linalg import expm

    from qestgeo.hilbert import BasisSpace
    from qestgeo.model import PureStateModel

    gens = []
    for _ in range(m):
        a = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
        gens.append(0.5 * (a + a.conj().T))
    psi0 = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    psi0 /= np.linalg.norm(psi0)

    def ev(theta):
        h = sum(t * g for t, g in zip(theta, gens))
        return expm(-1j * h) @ psi0

    return PureStateModel(
        space=BasisSpace(dim),
        m=m,
        domain=tuple((-2.0, 2.0) for _ in range(m)),
        evaluate_fn=ev,
        fd_step=fd_step,
        kind="random_unitary",
    )
