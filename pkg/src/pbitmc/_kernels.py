"""Optional numba inner loop for the chromatic sweep engine.

The kernel reproduces the vectorised numpy path exactly: identical
per-p-bit stream consumption (one draw per p-bit per sweep, same
generator arithmetic emulated in masked int64) and identical update
rules.  Layout is (p-bit, run) so the innermost run loop walks
contiguous memory; neighbour lists are padded to a fixed degree with
zero-weight slots, which the acceptance lookup tables absorb.  Work is
parallelised over the p-bits of the active color (never over connected
p-bits), so scheduling cannot change results.  Falls back cleanly when
numba is unavailable.
"""

from __future__ import annotations

import numpy as np

try:
    from numba import njit, prange
    NUMBA_AVAILABLE = True
except ImportError:          # pragma: no cover - exercised only without numba
    NUMBA_AVAILABLE = False

    def njit(*args, **kwargs):
        def wrap(fn):
            return fn
        if args and callable(args[0]):
            return args[0]
        return wrap

    prange = range

_M32 = 0xFFFFFFFF
_LFSR16_MASK = 0xB400
_LFSR32_MASK = 0x80200003

RNG_IDS = {"xoshiro128plus": 0, "lfsr16": 1, "lfsr32": 2}
NEURON_IDS = {"flip_exponential": 0, "tanh_sign": 1}

PAD_DEGREE = 6


def padded_neighbors(network, pad_to: int | None = None):
    """(n, pad) neighbour index table and matching per-p-bit weight rows,
    CSR order, padded with index 0 / weight 0."""
    w = network.weights
    n = network.num_pbits
    degs = np.diff(w.indptr)
    pad = int(max(PAD_DEGREE, degs.max()) if pad_to is None else pad_to)
    nbr = np.zeros((n, pad), dtype=np.int64)
    wts = np.zeros((n, pad), dtype=np.float64)
    for i in range(n):
        lo, hi = w.indptr[i], w.indptr[i + 1]
        nbr[i, :hi - lo] = w.indices[lo:hi]
        wts[i, :hi - lo] = w.data[lo:hi]
    return nbr, wts


def acceptance_tables(network, beta: float, neuron: str, pad_to: int | None = None):
    """Per-p-bit probability lookup over the 2^pad neighbour sign patterns.

    flip_exponential: entry [pattern] = exp(min(-2 beta dE, 0)) where bit t
    set means padded neighbour t agrees with m_i; flip when the uniform
    draw is below the entry (the activation-lookup trick).  tanh_sign:
    entry [pattern] = (1 + tanh(beta I))/2 with bit t meaning neighbour t
    is +1; the p-bit is set to +1 when the draw is below it.  Zero-weight
    padding slots leave the entries unchanged, so pad bits are harmless.
    """
    nbr, wts = padded_neighbors(network, pad_to)
    n, pad = wts.shape
    bits = (np.arange(1 << pad)[:, None] >> np.arange(pad)[None, :]) & 1
    signs = 2.0 * bits - 1.0                    # (2^pad, pad)
    fields = signs @ wts.T                      # (2^pad, n)
    if neuron == "flip_exponential":
        table = np.exp(np.minimum(-2.0 * beta * fields, 0.0))
    elif neuron == "tanh_sign":
        table = 0.5 * (1.0 + np.tanh(beta * fields))
    else:
        raise ValueError(f"unknown neuron {neuron!r}")
    return nbr, np.ascontiguousarray(table.T)   # (n, 2^pad)


@njit(cache=True, parallel=True)
def chromatic_ensemble(states, nbr, phase_members, phase_starts, sweeps,
                       record_every, neuron_id, rng_id, rng_state, lut,
                       members, w_re, w_im, r_slices, n_base_spins,
                       out_values):
    n, n_runs = states.shape
    n_phases = len(phase_starts) - 1
    rec = 1
    for sweep in range(1, sweeps + 1):
        for c in range(n_phases):
            for pidx in prange(phase_starts[c], phase_starts[c + 1]):
                i = phase_members[pidx]
                j0 = nbr[i, 0]
                j1 = nbr[i, 1]
                j2 = nbr[i, 2]
                j3 = nbr[i, 3]
                j4 = nbr[i, 4]
                j5 = nbr[i, 5]
                for run in range(n_runs):
                    mi = states[i, run]
                    if neuron_id == 0:
                        ref = mi
                    else:
                        ref = np.int8(1)
                    pat = ((np.int64(states[j0, run] == ref))
                           | (np.int64(states[j1, run] == ref) << 1)
                           | (np.int64(states[j2, run] == ref) << 2)
                           | (np.int64(states[j3, run] == ref) << 3)
                           | (np.int64(states[j4, run] == ref) << 4)
                           | (np.int64(states[j5, run] == ref) << 5))
                    if rng_id == 0:
                        a = np.int64(rng_state[i, run, 0])
                        b = np.int64(rng_state[i, run, 1])
                        cc = np.int64(rng_state[i, run, 2])
                        d = np.int64(rng_state[i, run, 3])
                        out = (a + d) & _M32
                        t = (b << 9) & _M32
                        cc ^= a
                        d ^= b
                        b ^= cc
                        a ^= d
                        cc ^= t
                        d = ((d << 11) | (d >> 21)) & _M32
                        rng_state[i, run, 0] = a
                        rng_state[i, run, 1] = b
                        rng_state[i, run, 2] = cc
                        rng_state[i, run, 3] = d
                        u = out * (2.0 ** -32)
                    elif rng_id == 1:
                        s = np.int64(rng_state[i, run, 0])
                        s = (s >> 1) ^ (_LFSR16_MASK * (s & 1))
                        rng_state[i, run, 0] = s
                        u = s * (2.0 ** -16)
                    else:
                        s = np.int64(rng_state[i, run, 0])
                        s = (s >> 1) ^ (_LFSR32_MASK * (s & 1))
                        rng_state[i, run, 0] = s
                        u = s * (2.0 ** -32)
                    accept = u < lut[i, pat]
                    if neuron_id == 0:
                        states[i, run] = -mi if accept else mi
                    else:
                        states[i, run] = 1 if accept else -1
        if sweep % record_every == 0:
            for run in prange(n_runs):
                n_base = members.shape[0]
                spb = members.shape[1]
                acc = 0.0
                for k in range(r_slices):
                    off = k * n_base_spins
                    zre = 0.0
                    zim = 0.0
                    for bb in range(n_base):
                        s = 0.0
                        for tt in range(spb):
                            s += states[off + members[bb, tt], run]
                        m_av = s / spb
                        zre += w_re[bb] * m_av
                        zim += w_im[bb] * m_av
                    acc += np.sqrt(zre * zre + zim * zim)
                out_values[rec, run] = acc / r_slices
            rec += 1
