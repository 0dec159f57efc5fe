import numpy as np
import pytest

from dpkit.fem import DiscreteFunction, build_interval_mesh, build_rect_mesh
from dpkit.fields import constant_phase


@pytest.fixture(scope="session")
def interval_mesh():
    return build_interval_mesh(0.0, 1.0, 32)


@pytest.fixture(scope="session")
def square_mesh():
    return build_rect_mesh((0.0, 1.0), (0.0, 1.0), 8, 8)


@pytest.fixture(scope="session")
def dp_phase():
    """The reference configuration p=2, q=3, mu=1 with ambient dimension 3."""
    return constant_phase(2.0, 3.0, 1.0, dim=3)


def random_nodal(mesh, rng, zero_boundary=True, scale=1.0):
    """A random nodal function, optionally with zero boundary trace."""
    values = scale * rng.standard_normal(mesh.num_nodes)
    if zero_boundary:
        values[mesh.boundary_nodes] = 0.0
    return DiscreteFunction(mesh, values, zero_boundary=zero_boundary)


def sine_bump(mesh, amplitude=1.0):
    """Product of coordinate sine half-waves: positive inside, zero on the boundary."""
    vals = np.full(mesh.num_nodes, amplitude)
    for d in range(mesh.dim):
        vals *= np.sin(np.pi * mesh.nodes[:, d])
    vals[mesh.boundary_nodes] = 0.0  # kill sin(pi) rounding residue
    return DiscreteFunction(mesh, vals, zero_boundary=True)
