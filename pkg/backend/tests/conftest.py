from pathlib import Path

import numpy as np
import pytest
import trimesh

from app.geometry import BallDomain, BoundaryMesh, BoxDomain, HalfSpacePartition, MeshDomain
from app.scenes import Bvp, ConstantSolution, HarmonicSolution, LinearSolution, TrigSolution

SCENES_DIR = Path(__file__).resolve().parent.parent / "scenes"

HEMISPHERE = HalfSpacePartition(axis=(0.0, 0.0, 1.0), threshold=0.0)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def unit_ball():
    return BallDomain([0.0, 0.0, 0.0], 1.0)


@pytest.fixture
def unit_disc():
    return BallDomain([0.0, 0.0, 0.0], 1.0, dim=2)


@pytest.fixture
def hemisphere_ball():
    """Unit ball with the upper cap (z > 0) Neumann and the lower half Dirichlet."""
    return BallDomain([0.0, 0.0, 0.0], 1.0, partition=HEMISPHERE)


@pytest.fixture
def unit_cube():
    return BoxDomain([0.0, 0.0, 0.0], [1.0, 1.0, 1.0])


@pytest.fixture
def icosphere_mesh():
    sphere = trimesh.creation.icosphere(subdivisions=2, radius=1.0)
    return BoundaryMesh.from_trimesh(sphere)


@pytest.fixture
def icosphere(icosphere_mesh):
    return MeshDomain(icosphere_mesh)


@pytest.fixture
def constant_scene(unit_ball):
    return Bvp.manufactured(unit_ball, ConstantSolution(constant=2.5), name="constant")


@pytest.fixture
def linear_scene(unit_ball):
    return Bvp.manufactured(unit_ball, LinearSolution(), name="linear")


@pytest.fixture
def harmonic_scene(unit_ball):
    return Bvp.manufactured(unit_ball, HarmonicSolution(), name="harmonic")


@pytest.fixture
def trig_scene(unit_ball):
    return Bvp.manufactured(unit_ball, TrigSolution(omega=np.pi), name="trig")


@pytest.fixture
def screened_scene(unit_ball):
    return Bvp.manufactured(unit_ball, TrigSolution(omega=np.pi), sigma=4.0, name="screened")


@pytest.fixture
def mixed_constant_scene(hemisphere_ball):
    return Bvp.manufactured(hemisphere_ball, ConstantSolution(constant=1.5), name="mixed-constant")


def sphere_quadrature(n_theta: int = 96, n_phi: int = 192):
    """Gauss-Legendre in cos(theta) times uniform in phi: unit directions and area weights summing to 4 pi."""
    nodes, weights = np.polynomial.legendre.leggauss(n_theta)
    phi = (np.arange(n_phi) + 0.5) * 2.0 * np.pi / n_phi
    ct, ph = np.meshgrid(nodes, phi, indexing="ij")
    st = np.sqrt(1.0 - ct * ct)
    dirs = np.stack([st * np.cos(ph), st * np.sin(ph), ct], axis=-1).reshape(-1, 3)
    w = np.repeat(weights, n_phi) * (2.0 * np.pi / n_phi)
    return dirs, w


@pytest.fixture(scope="session")
def sphere_nodes():
    return sphere_quadrature()
