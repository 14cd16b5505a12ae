"""Exact small-instance references: Boltzmann distributions, one-sweep
transition matrices and their spectral decay series.

State encoding: state integer s maps to spins via bit i of s = spin i,
with bit 1 meaning +1.  All distributions are indexed by that code.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .coloring import color_groups, greedy_color, two_color

MAX_ENUM_BITS = 20
MAX_MATRIX_BITS = 12


def spins_of_codes(codes: np.ndarray, n: int) -> np.ndarray:
    """(len(codes), n) +-1 matrix for the given state integers."""
    codes = np.asarray(codes, dtype=np.uint64)
    bits = (codes[:, None] >> np.arange(n, dtype=np.uint64)[None, :]) & np.uint64(1)
    return (2 * bits.astype(np.int8) - 1)


def codes_of_spins(states: np.ndarray) -> np.ndarray:
    """Inverse of :func:`spins_of_codes` for a (runs, n) +-1 matrix."""
    states = np.atleast_2d(states)
    n = states.shape[1]
    weights = (np.uint64(1) << np.arange(n, dtype=np.uint64))
    bits = ((states + 1) // 2).astype(np.uint64)
    return bits @ weights


@dataclass
class ExactDistribution:
    probabilities: np.ndarray
    beta: float
    energies: np.ndarray

    @property
    def num_states(self) -> int:
        return len(self.probabilities)


def _pair_couplings(network) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    coo = network.weights.tocoo()
    keep = coo.row < coo.col
    return coo.row[keep], coo.col[keep], coo.data[keep]


def state_energies(network, codes: np.ndarray) -> np.ndarray:
    """H_cl for every state code, evaluated edge by edge."""
    n = network.num_pbits
    ii, jj, ww = _pair_couplings(network)
    out = np.empty(len(codes), dtype=np.float64)
    block = 1 << 14
    for lo in range(0, len(codes), block):
        m = spins_of_codes(codes[lo:lo + block], n).astype(np.float64)
        out[lo:lo + block] = -(m[:, ii] * m[:, jj]) @ ww
    return out


def exact_boltzmann(network, beta: float) -> ExactDistribution:
    """Full-enumeration Boltzmann distribution exp(-beta H_cl)/Z."""
    n = network.num_pbits
    if n > MAX_ENUM_BITS:
        raise ValueError(f"{n} p-bits exceeds enumeration cap {MAX_ENUM_BITS}")
    codes = np.arange(1 << n, dtype=np.uint64)
    energies = state_energies(network, codes)
    logp = -beta * (energies - energies.min())
    p = np.exp(logp)
    p /= p.sum()
    return ExactDistribution(probabilities=p, beta=float(beta),
                             energies=energies)


def _site_kernel(network, beta: float, site: int, neuron: str) -> np.ndarray:
    """(N, N) one-site update kernel, rows = from-state."""
    n = network.num_pbits
    N = 1 << n
    codes = np.arange(N, dtype=np.uint64)
    m = spins_of_codes(codes, n).astype(np.float64)
    w_col = np.asarray(network.weights[[site], :].todense()).ravel()
    field = m @ w_col
    bit = np.uint64(1 << site)
    flipped = (codes ^ bit).astype(np.int64)
    K = np.zeros((N, N))
    rows = np.arange(N)
    if neuron == "tanh_sign":
        p_up = 0.5 * (1.0 + np.tanh(beta * field))
        goes_up = m[:, site] < 0
        p_change = np.where(goes_up, p_up, 1.0 - p_up)
    elif neuron == "flip_exponential":
        delta_e = m[:, site] * field
        p_change = np.exp(-2.0 * beta * np.maximum(delta_e, 0.0))
    else:
        raise ValueError(f"unknown neuron {neuron!r}")
    K[rows, flipped] = p_change
    K[rows, rows] += 1.0 - p_change
    return K


def transition_matrix(network, beta: float, rule: str,
                      neuron: str = "tanh_sign") -> np.ndarray:
    """Row-stochastic one-sweep matrix (apply as p' = p @ W).

    ``sequential_gibbs`` updates sites 0..n-1 in order with the tanh
    (Gibbs) neuron; ``chromatic_sweep`` composes per-color phases in
    ascending color order with the requested neuron, using the same
    two-color-else-greedy coloring as the sweep engine.
    """
    n = network.num_pbits
    if n > MAX_MATRIX_BITS:
        raise ValueError(f"{n} p-bits exceeds matrix cap {MAX_MATRIX_BITS}")
    if rule == "sequential_gibbs":
        order = [[i] for i in range(n)]
        neuron = "tanh_sign"
    elif rule == "chromatic_sweep":
        col = two_color(network)
        if hasattr(col, "odd_cycle"):
            col = greedy_color(network)
        order = [g.tolist() for g in color_groups(col)]
    else:
        raise ValueError(f"unknown update rule {rule!r}")
    W = np.eye(1 << n)
    for group in order:
        for site in group:  # same-color kernels commute
            W = W @ _site_kernel(network, beta, site, neuron)
    return W


@dataclass
class DecayMode:
    amplitude: complex
    eigenvalue: complex

    @property
    def rate(self) -> complex:
        return np.log(self.eigenvalue + 0j)


@dataclass
class DecaySeries:
    modes: list[DecayMode]
    defective: bool

    def evaluate(self, k: np.ndarray) -> np.ndarray:
        """Sum of amplitude * eigenvalue^k over the modes (real part)."""
        k = np.asarray(k, dtype=np.float64)
        total = np.zeros(len(k), dtype=np.complex128)
        for mode in self.modes:
            total += mode.amplitude * np.power(mode.eigenvalue + 0j, k)
        return total.real

    def dominant_rates(self, tol: float = 1e-9) -> list[float]:
        """|eigenvalue| of non-stationary modes with non-negligible
        amplitude, descending."""
        mags = sorted({round(abs(m.eigenvalue), 12) for m in self.modes
                       if abs(m.amplitude) > tol
                       and abs(abs(m.eigenvalue) - 1.0) > 1e-12},
                      reverse=True)
        return mags


def decay_series(matrix: np.ndarray, initial: int,
                 observable: np.ndarray) -> DecaySeries:
    """Spectral decomposition of the observable trajectory.

    With p_k = p_0 W^k and observable weights b per state, the trajectory
    <m>(k) = p_k . b decomposes as sum_j alpha_j lambda_j^k over the
    eigenvalues of W.  The matrix is flagged defective when the
    eigenvector basis is ill-conditioned.
    """
    matrix = np.asarray(matrix, dtype=np.float64)
    N = matrix.shape[0]
    observable = np.asarray(observable, dtype=np.float64)
    if observable.shape != (N,):
        raise ValueError("observable weight vector has wrong length")
    evals, vr = scipy.linalg.eig(matrix.T)
    cond = np.linalg.cond(vr)
    defective = not np.isfinite(cond) or cond > 1e10
    p0 = np.zeros(N)
    p0[initial] = 1.0
    coeff = np.linalg.solve(vr, p0.astype(np.complex128))
    proj = observable.astype(np.complex128) @ vr
    amps = coeff * proj
    idx = np.argsort(-np.abs(evals))
    modes = [DecayMode(amplitude=complex(amps[i]), eigenvalue=complex(evals[i]))
             for i in idx]
    return DecaySeries(modes=modes, defective=bool(defective))


def tv_distance(p: np.ndarray, q: np.ndarray) -> float:
    """Total variation distance (1/2) sum |p - q|."""
    p = np.asarray(p, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    if p.shape != q.shape:
        raise ValueError(f"distribution size mismatch: {p.shape} vs {q.shape}")
    return float(0.5 * np.abs(p - q).sum())


def empirical_distribution(codes: np.ndarray, n: int) -> np.ndarray:
    """Normalised state histogram over all 2^n codes."""
    counts = np.bincount(np.asarray(codes, dtype=np.int64), minlength=1 << n)
    return counts.astype(np.float64) / counts.sum()
