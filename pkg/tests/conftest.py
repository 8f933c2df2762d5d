import numpy as np
import pytest
from scipy.spatial import ConvexHull

from smoothmatch.mesh import TriMesh
from smoothmatch.spectral import PointwiseMap, compute_basis
from smoothmatch.synth import icosphere


def hull_mesh(rng, n, normalize=True):
    """Random closed triangle mesh: convex hull of sphere points,
    radially perturbed after connectivity is fixed."""
    pts = rng.normal(size=(n, 3))
    pts /= np.linalg.norm(pts, axis=1, keepdims=True)
    faces = ConvexHull(pts).simplices
    pts = pts * rng.uniform(0.85, 1.15, size=(n, 1))
    mesh = TriMesh(pts, faces)
    return mesh.normalized() if normalize else mesh


def random_map(rng, mesh_src, mesh_tgt):
    return PointwiseMap(
        rng.integers(0, mesh_tgt.n_vertices, mesh_src.n_vertices), mesh_tgt.n_vertices
    )


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


@pytest.fixture(scope="session")
def right_triangle():
    return TriMesh(
        [[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]], [[0, 1, 2]]
    )


@pytest.fixture(scope="session")
def unit_square():
    verts = [[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [1.0, 1.0, 0.0], [0.0, 1.0, 0.0]]
    return TriMesh(verts, [[0, 1, 2], [0, 2, 3]])


@pytest.fixture(scope="session")
def equilateral():
    h = np.sqrt(3.0) / 2.0
    return TriMesh([[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.5, h, 0.0]], [[0, 1, 2]])


@pytest.fixture(scope="session")
def sphere2():
    return icosphere(2).normalized()


@pytest.fixture(scope="session")
def sphere2_basis(sphere2):
    return compute_basis(sphere2, 100)


@pytest.fixture(scope="session")
def sphere4():
    return icosphere(4).normalized()


@pytest.fixture(scope="session")
def sphere4_basis(sphere4):
    return compute_basis(sphere4, 100)
