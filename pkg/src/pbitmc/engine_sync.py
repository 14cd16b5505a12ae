"""Synchronous graph-colored sweep engine.

One sweep visits the colors in ascending order and updates every p-bit of
the active color simultaneously; properly colored neighbours are never
co-updated, so in-place updates are exact Gibbs/Metropolis moves.  Each
p-bit consumes only its own random stream (stream id = run*n + p-bit),
which makes results independent of chunking or scheduling.

Two neuron forms are supported:

``flip_exponential``  flip when exp(-2 beta dE) exceeds the uniform draw,
                      i.e. a Metropolis accept-reject on the halved energy
                      change dE_i = m_i sum_j W_ij m_j.
``tanh_sign``         resample the p-bit from its conditional
                      distribution, sign(tanh(beta I_i) - 2u + 1).

The module keeps a scalar reference implementation (:func:`chromatic_sweep`)
and a vectorised ensemble runner (:func:`run_ensemble`); the test suite
pins them to identical trajectories.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from . import _kernels, observables
from .coloring import Coloring, color_groups, greedy_color, two_color, verify_coloring
from .rng import RngStream, StreamBank, mt_run_generator
from .trotter import ReplicatedNetwork


@dataclass
class SweepConfig:
    beta: float | None = None            # default: network.beta
    neuron: str = "flip_exponential"
    sweeps: int = 1000
    record_every: int = 1
    clock_period_ns: float = 8.0
    randomize_phase_order: bool = False

    def __post_init__(self):
        if self.beta is not None and self.beta <= 0:
            raise ValueError("beta must be > 0")
        if self.record_every < 1:
            raise ValueError("record_every must be >= 1")
        if self.neuron not in ("flip_exponential", "tanh_sign"):
            raise ValueError(f"unknown neuron {self.neuron!r}")
        if self.sweeps < 0:
            raise ValueError("sweeps must be >= 0")


@dataclass
class RunTrace:
    """Observable time series of a single run."""

    run_id: int
    sweeps: np.ndarray
    time_ns: np.ndarray
    values: np.ndarray


def synapse_delta_e(network: ReplicatedNetwork, state: np.ndarray, i: int) -> float:
    """dE_i = m_i sum_j W_ij m_j over i's neighbours (half the energy
    change of flipping i)."""
    n = network.num_pbits
    if not 0 <= i < n:
        raise IndexError(f"p-bit index {i} out of range [0, {n})")
    indptr, indices, data = network.neighbor_arrays()
    lo, hi = indptr[i], indptr[i + 1]
    state = np.asarray(state)
    return float(state[i] * (data[lo:hi] @ state[indices[lo:hi]]))


def neuron_flip_exp(m_i: int, delta_e: float, beta: float, u: float) -> int:
    """Metropolis neuron: flip when exp(-2 beta dE) > u."""
    x = -2.0 * beta * delta_e
    if x >= 0.0 or math.exp(x) > u:
        return -m_i
    return m_i


def neuron_tanh(input_field: float, beta: float, u: float) -> int:
    """Gibbs neuron: sign(tanh(beta I) - 2u + 1)."""
    return 1 if math.tanh(beta * input_field) - 2.0 * u + 1.0 > 0.0 else -1


def chromatic_sweep(network: ReplicatedNetwork, state: np.ndarray,
                    coloring: Coloring, rng_streams: list[RngStream],
                    config: SweepConfig) -> np.ndarray:
    """One full sweep, updating each color group in ascending order.

    Scalar reference path: state is modified in place and returned; each
    p-bit draws one uniform from its own stream per sweep.
    """
    if __debug__ and not verify_coloring(network, coloring):
        raise ValueError("invalid coloring")
    beta = config.beta if config.beta is not None else network.beta
    state = np.asarray(state)
    indptr, indices, data = network.neighbor_arrays()
    for group in color_groups(coloring):
        for i in group.tolist():
            lo, hi = indptr[i], indptr[i + 1]
            fld = float(data[lo:hi] @ state[indices[lo:hi]])
            u = rng_streams[i].next_uniform()
            if config.neuron == "flip_exponential":
                state[i] = neuron_flip_exp(int(state[i]), state[i] * fld,
                                           beta, u)
            else:
                state[i] = neuron_tanh(fld, beta, u)
    return state


def resolve_coloring(network: ReplicatedNetwork) -> Coloring:
    """Two-coloring when the network is bipartite, greedy otherwise."""
    col = two_color(network)
    if hasattr(col, "odd_cycle"):
        col = greedy_color(network)
    return col


def _phase_orders(config: SweepConfig, num_colors: int, sweeps: int, seed: int):
    base = np.arange(num_colors)
    if not config.randomize_phase_order:
        return None
    gen = np.random.Generator(np.random.PCG64(seed ^ 0x9E3779B9))
    return [gen.permutation(base) for _ in range(sweeps)]


def run_ensemble(network: ReplicatedNetwork, initial: np.ndarray, runs: int,
                 config: SweepConfig, hook=None, *, seed: int = 0,
                 rng_kind: str = "xoshiro128plus",
                 coloring: Coloring | None = None, run_offset: int = 0,
                 chunk_size: int | None = None,
                 engine: str = "auto") -> list[RunTrace]:
    """R independent runs from one initial state with per-run substreams.

    All runs share the recording grid (sweep 0 = the initial state).
    Results depend only on (seed, rng_kind, run ids), not on chunking or
    thread scheduling, because every p-bit consumes only its own stream.
    ``engine`` picks the inner loop: the numba kernel when eligible
    ("auto"), or the vectorised numpy path ("numpy").
    """
    if runs < 1:
        raise ValueError("runs must be >= 1")
    initial = np.asarray(initial, dtype=np.float64)
    if initial.shape != (network.num_pbits,):
        raise ValueError(
            f"initial state length {initial.shape} != {network.num_pbits}")
    if coloring is None:
        coloring = resolve_coloring(network)
    if __debug__ and not verify_coloring(network, coloring):
        raise ValueError("invalid coloring")

    use_kernel = (
        engine in ("auto", "numba")
        and _kernels.NUMBA_AVAILABLE
        and hook is None
        and bool(network.base.plaquettes)
        and rng_kind in _kernels.RNG_IDS
        and not config.randomize_phase_order
        and network.max_degree() <= _kernels.PAD_DEGREE)
    if engine == "numba" and not use_kernel:
        raise ValueError("numba kernel not usable for this configuration")
    if hook is None:
        hook = observables.default_hook(network)

    chunk = runs if chunk_size is None else max(1, int(chunk_size))
    traces: list[RunTrace] = []
    for lo in range(0, runs, chunk):
        ids = np.arange(lo, min(lo + chunk, runs)) + run_offset
        if use_kernel:
            traces.extend(_run_chunk_numba(network, initial, ids, config,
                                           hook, coloring, seed, rng_kind))
        else:
            traces.extend(_run_chunk(network, initial, ids, config, hook,
                                     coloring, seed, rng_kind))
    return traces


def _run_chunk_numba(network, initial, run_ids, config, hook, coloring,
                     seed, rng_kind) -> list[RunTrace]:
    n = network.num_pbits
    beta = config.beta if config.beta is not None else network.beta
    groups = color_groups(coloring)
    ncolors = len(groups)
    R = len(run_ids)

    phase_members = np.concatenate(groups).astype(np.int64)
    phase_starts = np.zeros(ncolors + 1, dtype=np.int64)
    np.cumsum([len(g) for g in groups], out=phase_starts[1:])

    rid64 = np.asarray(run_ids, dtype=np.uint64)
    ids = rid64[None, :] * np.uint64(n) + np.arange(n, dtype=np.uint64)[:, None]
    bank = StreamBank(rng_kind, seed, ids)          # (n, R) streams
    rng_state = np.zeros((n, R, 4), dtype=np.uint32)
    for w_idx, arr in enumerate(bank._s):
        rng_state[:, :, w_idx] = arr

    base = network.base
    members = base.basis_members().astype(np.int64)
    w = observables.pseudospin_weights(base)
    states = np.repeat(initial[:, None].astype(np.int8), R, axis=1)

    rec_sweeps = np.arange(0, config.sweeps + 1, config.record_every)
    time_ns = rec_sweeps * ncolors * config.clock_period_ns
    values = np.empty((len(rec_sweeps), R))
    values[0] = hook(states.T)

    nbr, lut = _kernels.acceptance_tables(network, beta, config.neuron)
    _kernels.chromatic_ensemble(
        states, nbr, phase_members, phase_starts, int(config.sweeps),
        int(config.record_every), _kernels.NEURON_IDS[config.neuron],
        _kernels.RNG_IDS[rng_kind], rng_state, lut, members,
        np.ascontiguousarray(w.real), np.ascontiguousarray(w.imag),
        int(network.r), int(base.num_spins), values)

    return [RunTrace(run_id=int(rid), sweeps=rec_sweeps.copy(),
                     time_ns=time_ns.copy(), values=values[:, k].copy())
            for k, rid in enumerate(run_ids)]


def _run_chunk(network, initial, run_ids, config, hook, coloring,
               seed, rng_kind) -> list[RunTrace]:
    n = network.num_pbits
    beta = config.beta if config.beta is not None else network.beta
    groups = color_groups(coloring)
    ncolors = len(groups)
    R = len(run_ids)

    w_rows = [network.weights[g, :] for g in groups]
    if rng_kind == "mt_reference":
        gens = [mt_run_generator(seed, int(rid)) for rid in run_ids]
        banks = None
    else:
        rid64 = np.asarray(run_ids, dtype=np.uint64)
        banks = [StreamBank(rng_kind, seed,
                            rid64[None, :] * np.uint64(n)
                            + g[:, None].astype(np.uint64))
                 for g in groups]
        gens = None

    m = np.repeat(initial[:, None], R, axis=1)   # (n, R), float64 +-1
    rec_sweeps = np.arange(0, config.sweeps + 1, config.record_every)
    time_ns = rec_sweeps * ncolors * config.clock_period_ns
    values = np.empty((len(rec_sweeps), R))
    values[0] = hook(m.T)
    orders = _phase_orders(config, ncolors, config.sweeps, seed)

    rec = 1
    for sweep in range(1, config.sweeps + 1):
        order = range(ncolors) if orders is None else orders[sweep - 1]
        for c in order:
            g = groups[c]
            fld = w_rows[c] @ m                      # (n_c, R)
            if banks is not None:
                u = banks[c].uniforms()
            else:
                u = np.empty((len(g), R))
                for k, gen in enumerate(gens):
                    u[:, k] = gen.random_sample(len(g))
            if config.neuron == "flip_exponential":
                x = -2.0 * beta * (m[g, :] * fld)
                flip = (x >= 0.0) | (u < np.exp(np.minimum(x, 0.0)))
                m[g, :] = np.where(flip, -m[g, :], m[g, :])
            else:
                m[g, :] = np.where(np.tanh(beta * fld) - 2.0 * u + 1.0 > 0.0,
                                   1.0, -1.0)
        if sweep % config.record_every == 0:
            values[rec] = hook(m.T)
            rec += 1

    return [RunTrace(run_id=int(rid), sweeps=rec_sweeps.copy(),
                     time_ns=time_ns.copy(), values=values[:, k].copy())
            for k, rid in enumerate(run_ids)]


def final_states(network: ReplicatedNetwork, initial: np.ndarray, runs: int,
                 config: SweepConfig, *, seed: int = 0,
                 rng_kind: str = "xoshiro128plus",
                 coloring: Coloring | None = None,
                 sample_every: int = 0, burn_in: int = 0):
    """Run the ensemble and collect raw states instead of observables.

    With ``sample_every`` > 0, returns all post-burn-in states sampled at
    that cadence stacked as a (samples, n) matrix; used by the
    distribution-fidelity tests.  Otherwise returns the final (runs, n)
    states.
    """
    if coloring is None:
        coloring = resolve_coloring(network)
    collected = []

    def collector(states):
        collected.append(states.astype(np.int8))
        return np.zeros(states.shape[0])

    cfg = replace(config, record_every=sample_every if sample_every else
                  max(config.sweeps, 1))
    run_ensemble(network, initial, runs, cfg, hook=collector, seed=seed,
                 rng_kind=rng_kind, coloring=coloring)
    if sample_every:
        keep = [s for k, s in enumerate(collected)
                if k * sample_every >= burn_in]
        return np.vstack(keep)
    return collected[-1]
