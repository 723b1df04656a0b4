import numpy as np
import pytest

from galbrun2d.mesh import generate_square_mesh, make_mesh


@pytest.fixture(scope="session")
def two_elem_mesh():
    verts = np.array([[-4.0, -4.0], [4.0, -4.0], [4.0, 4.0], [-4.0, 4.0]])
    tris = np.array([[0, 1, 2], [0, 2, 3]])
    return make_mesh(verts, tris)


@pytest.fixture(scope="session")
def mesh_h1():
    return generate_square_mesh(1.0, seed=0)


@pytest.fixture(scope="session")
def mesh_h05():
    return generate_square_mesh(0.5, seed=0)


def vector_interpolant(space, fx, fy):
    vals = np.zeros(space.ndof, dtype=complex)
    x, y = space.node_coords[:, 0], space.node_coords[:, 1]
    vals[0::2] = fx(x, y)
    vals[1::2] = fy(x, y)
    return vals
