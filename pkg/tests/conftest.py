from pathlib import Path

import pytest

from becgyro import (
    HamiltonianModel,
    ModelParams,
    TruncationSpec,
    build_basis,
)

# shared on-disk tensor cache so repeated runs skip the quadrature build
CACHE_DIR = Path(__file__).resolve().parent.parent / "cache"


def make_model(n_particles, l_max=None, g=1.0, anisotropy=0.03, n_ll_max=2):
    spec = TruncationSpec(
        n_particles=n_particles,
        l_max=n_particles + 4 if l_max is None else l_max,
        n_ll_max=n_ll_max,
    )
    basis = build_basis(spec)
    params = ModelParams(g=g, anisotropy=anisotropy, spec=spec)
    return HamiltonianModel(params, basis, cache_dir=CACHE_DIR)


@pytest.fixture(scope="session")
def model2():
    return make_model(2, l_max=6)


@pytest.fixture(scope="session")
def basis2(model2):
    return model2.basis


@pytest.fixture(scope="session")
def model6():
    return make_model(6, l_max=10)


@pytest.fixture(scope="session")
def basis6(model6):
    return model6.basis
