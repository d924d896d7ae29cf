import numpy as np
import pytest

from newtonlab import geometry, materials


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(scope="session")
def beam_mesh():
    """Two-cell beam: the smallest mesh with interior structure."""
    return geometry.generate_box_mesh((2.0, 1.0, 1.0), (2, 1, 1))


@pytest.fixture(scope="session")
def beam_mesh_p2():
    return geometry.generate_box_mesh((2.0, 1.0, 1.0), (2, 1, 1), geometry.P2)


@pytest.fixture(scope="session")
def single_tet_mesh():
    return geometry.TetMesh(
        vertices=np.array([[0.0, 0, 0], [1, 0, 0], [0, 1, 0], [0, 0, 1]]),
        tets=np.array([[0, 1, 2, 3]]))


@pytest.fixture(scope="session")
def rubber_params():
    return materials.MaterialParams(youngs_modulus=4e5, poisson_ratio=0.40,
                                    density=1000.0)


@pytest.fixture(scope="session")
def nh_model(rubber_params):
    return materials.MaterialModel(materials.NEO_HOOKEAN, rubber_params)


@pytest.fixture(scope="session")
def snh_model(rubber_params):
    return materials.MaterialModel(materials.STABLE_NEO_HOOKEAN, rubber_params)


def random_deformation_gradient(rng, scale=0.3, positive=True):
    """Random F near identity; resampled until det F ∈ [0.3, 3] if
    positive is requested."""
    while True:
        F = np.eye(3) + scale * rng.standard_normal((3, 3))
        J = np.linalg.det(F)
        if not positive:
            return F
        if 0.3 <= J <= 3.0:
            return F
