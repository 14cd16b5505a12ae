"""Suzuki-Trotter mapping of the transverse-field Ising problem onto a
replicated p-bit network.

The sampler Hamiltonian over the n*r p-bits is

    H_cl(m) = -sum_k [ sum_(i<j) Jpar_ij m_ik m_jk + sum_i Jperp m_ik m_ik+1 ]

with Jpar_ij = J_ij / r per replica copy of each lattice edge and the
replica ring closed periodically (m_i,r+1 = m_i,1).  J_ij here is the
*sampler* coupling (alignment-favouring positive), i.e. the negated raw
figure value stored on the lattice; the single global negation is
``lattice.COUPLING_SIGN`` and is pinned by the ground-state degeneracy
tests.  P-bit index layout is replica-major: p-bit (i, k) sits at k*n + i.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .lattice import COUPLING_SIGN, LatticeGraph


def replica_coupling(beta: float, gamma: float, r: int) -> float:
    """Inter-replica coupling -(0.5/beta) ln tanh(beta*gamma/r).

    Strictly positive for any finite positive arguments and increasing in
    r.  Raises OverflowError when beta*gamma/r is large enough that tanh
    rounds to 1 (coupling underflows to 0 would be wrong: the replicas
    decouple) or small enough that tanh underflows to 0.
    """
    if beta <= 0 or gamma <= 0:
        raise ValueError(f"beta and gamma must be > 0 (got {beta}, {gamma})")
    if not isinstance(r, (int, np.integer)) or r < 1:
        raise ValueError(f"replica count must be a positive integer (got {r})")
    x = beta * gamma / r
    t = math.tanh(x)
    if t == 0.0:
        raise OverflowError(f"tanh({x}) underflowed to 0; beta*gamma/r too small")
    if t == 1.0:
        raise OverflowError(f"tanh({x}) rounded to 1; replicas decouple")
    return -0.5 / beta * math.log(t)


@dataclass
class ReplicatedNetwork:
    """Trotterized p-bit network: r coupled copies of the base lattice.

    ``weights`` is the symmetric sparse matrix W of sampler couplings
    (H = -1/2 m.W.m, each undirected edge stored in both directions);
    ``j_parallel`` aligns with the base lattice's edge arrays.
    """

    base: LatticeGraph
    r: int
    beta: float
    gamma: float
    j_perp: float
    j_parallel: np.ndarray
    weights: sp.csr_matrix
    _neighbor_cache: tuple | None = field(default=None, repr=False)

    @property
    def num_pbits(self) -> int:
        return self.base.num_spins * self.r

    def max_degree(self) -> int:
        return int(np.diff(self.weights.indptr).max())

    def neighbor_arrays(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(indptr, indices, coupling) arrays of the adjacency, CSR layout."""
        if self._neighbor_cache is None:
            w = self.weights
            self._neighbor_cache = (w.indptr, w.indices, w.data)
        return self._neighbor_cache

    def pbit_index(self, spin: int, replica: int) -> int:
        return replica * self.base.num_spins + spin


def _symmetric_csr(n: int, ii, jj, ww) -> sp.csr_matrix:
    ii = np.asarray(ii)
    jj = np.asarray(jj)
    ww = np.asarray(ww, dtype=np.float64)
    mat = sp.coo_matrix(
        (np.concatenate([ww, ww]),
         (np.concatenate([ii, jj]), np.concatenate([jj, ii]))),
        shape=(n, n))
    out = mat.tocsr()
    out.sum_duplicates()
    return out


def trotterize(lattice: LatticeGraph, r: int, beta: float, gamma: float,
               require_even_r: bool = True) -> ReplicatedNetwork:
    """Replicate the lattice r times and couple replicas into a ring.

    Even r keeps the replica rings even cycles, so a bipartite base stays
    two-colorable; odd r is rejected unless ``require_even_r`` is disabled
    (used only by coloring regression tests).
    """
    if not isinstance(r, (int, np.integer)) or r < 2:
        raise ValueError(f"replica count must be an integer >= 2 (got {r})")
    if r % 2 and require_even_r:
        raise ValueError(
            f"replica count must be even (got {r}): an odd replica ring is an "
            "odd cycle and breaks the two-coloring of a bipartite lattice")
    jp = replica_coupling(beta, gamma, r)
    n = lattice.num_spins
    j_parallel = COUPLING_SIGN * lattice.edge_coupling / r

    ii, jj, ww = [], [], []
    for k in range(r):
        off = k * n
        ii.append(lattice.edge_i + off)
        jj.append(lattice.edge_j + off)
        ww.append(j_parallel)
    spins = np.arange(n)
    for k in range(r):
        ii.append(k * n + spins)
        jj.append(((k + 1) % r) * n + spins)
        ww.append(np.full(n, jp))
    weights = _symmetric_csr(n * r, np.concatenate(ii), np.concatenate(jj),
                             np.concatenate(ww))
    return ReplicatedNetwork(base=lattice, r=int(r), beta=float(beta),
                             gamma=float(gamma), j_perp=jp,
                             j_parallel=j_parallel, weights=weights)


def classical_network(lattice: LatticeGraph, beta: float) -> ReplicatedNetwork:
    """Single-replica (classical) sampler network for the lattice itself.

    No replica ring and no transverse field; used for the clockless
    triangular-lattice demonstration and for small oracle fixtures.
    """
    if beta <= 0:
        raise ValueError(f"beta must be > 0 (got {beta})")
    j_parallel = COUPLING_SIGN * lattice.edge_coupling
    weights = _symmetric_csr(lattice.num_spins, lattice.edge_i,
                             lattice.edge_j, j_parallel)
    return ReplicatedNetwork(base=lattice, r=1, beta=float(beta), gamma=0.0,
                             j_perp=0.0, j_parallel=j_parallel,
                             weights=weights)


def classical_energy(network: ReplicatedNetwork, state: np.ndarray) -> float:
    """H_cl of a flat +-1 state over the n*r p-bits (each edge once)."""
    state = np.asarray(state, dtype=np.float64)
    if state.shape != (network.num_pbits,):
        raise ValueError(
            f"state length {state.shape} != ({network.num_pbits},)")
    return float(-0.5 * state @ (network.weights @ state))


def replicate_state(network: ReplicatedNetwork, base_state: np.ndarray) -> np.ndarray:
    """Tile a base-lattice configuration across all replicas."""
    base_state = np.asarray(base_state)
    if base_state.shape != (network.base.num_spins,):
        raise ValueError("base state has wrong length")
    return np.tile(base_state, network.r)
