import numpy as np
import pytest

import pbitmc as pb
from pbitmc.lattice import custom_graph

BETA_PAPER = 1.0 / 0.244
GAMMA_PAPER = 0.736


@pytest.fixture(scope="session")
def sq_oct_6():
    return pb.build_square_octagonal(6)


@pytest.fixture(scope="session")
def tri_6x6():
    return pb.build_triangular(6, 6)


@pytest.fixture(scope="session")
def net_L6_r10(sq_oct_6):
    return pb.trotterize(sq_oct_6, 10, BETA_PAPER, GAMMA_PAPER)


@pytest.fixture(scope="session")
def frustrated_4spin():
    """Triangular 2x2: four spins, frustrated, plenty small for enumeration."""
    lat = pb.build_triangular(2, 2)
    return pb.classical_network(lat, 0.7)


@pytest.fixture(scope="session")
def net_8pbit():
    """Single FM edge trotterized with r = 4: an 8-p-bit bipartite network."""
    base = custom_graph(2, [(0, 1, -1.0)])
    return pb.trotterize(base, 4, beta=1.0, gamma=0.8)


@pytest.fixture(scope="session")
def net_6pbit_triangle():
    """Frustrated AFM triangle with r = 2: the 6-p-bit spectral fixture."""
    tri = custom_graph(3, [(0, 1, 1.0), (1, 2, 1.0), (0, 2, 1.0)])
    return pb.trotterize(tri, 2, beta=0.9, gamma=0.7)


def brute_force_distribution(network, beta):
    """Independent Boltzmann enumeration (no pbitmc.oracle code)."""
    n = network.num_pbits
    coo = network.weights.tocoo()
    pairs = [(i, j, w) for i, j, w in zip(coo.row, coo.col, coo.data) if i < j]
    probs = np.empty(1 << n)
    for code in range(1 << n):
        m = [1 if (code >> k) & 1 else -1 for k in range(n)]
        energy = -sum(w * m[i] * m[j] for i, j, w in pairs)
        probs[code] = -beta * energy
    probs = np.exp(probs - probs.max())
    return probs / probs.sum()
