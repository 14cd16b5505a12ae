"""Behavioral discrete-event model of the clockless autonomous p-computer.

Every p-bit attempts updates at independent exponential intervals with
mean ``tau_n`` (a free-running stochastic device has no memory), and each
attempt evaluates its neuron against neighbour states as they were
``tau_s`` earlier: the synapse propagation delay means concurrent flips
are *not* suppressed, only measured.  A single global event queue keeps
one run sequential; runs parallelise freely.

With ``tau_s = 0`` the dynamics is exactly sequential Gibbs/Metropolis in
Poisson-random order, which is the oracle anchor used by the fidelity
tests.
"""

from __future__ import annotations

import heapq
import warnings
from bisect import bisect_right
from collections import deque
from dataclasses import dataclass

import numpy as np

from . import observables
from .rng import RngStream
from .trotter import ReplicatedNetwork


@dataclass
class AsyncConfig:
    tau_n: float = 1.0
    tau_s: float = 0.0
    horizon: float = 100.0
    record_every: float = 1.0     # observable grid spacing, same time units
    neuron: str = "flip_exponential"
    beta: float | None = None
    deterministic_intervals: bool = False
    record_events: bool = True

    def __post_init__(self):
        if self.tau_n <= 0:
            raise ValueError("tau_n must be > 0")
        if self.tau_s < 0:
            raise ValueError("tau_s must be >= 0")
        if self.horizon <= 0:
            raise ValueError("horizon must be > 0")
        if self.record_every <= 0:
            raise ValueError("record_every must be > 0")
        if self.neuron not in ("flip_exponential", "tanh_sign"):
            raise ValueError(f"unknown neuron {self.neuron!r}")
        if self.s > 0.2:
            warnings.warn(f"s = tau_s/tau_n = {self.s:.3f} > 0.2: stale-read "
                          "errors will not be rare", stacklevel=2)

    @property
    def s(self) -> float:
        return self.tau_s / self.tau_n


@dataclass
class EventTrace:
    """Flip events, collision count and grid-sampled observable of one run."""

    num_pbits: int
    tau_n: float
    tau_s: float
    horizon: float
    event_times: np.ndarray
    event_pbits: np.ndarray
    event_states: np.ndarray
    attempts: int
    collisions: int
    grid_times: np.ndarray
    grid_values: np.ndarray
    final_state: np.ndarray
    grid_states: np.ndarray | None = None


def run_async(network: ReplicatedNetwork, initial: np.ndarray,
              config: AsyncConfig, *, seed: int = 0,
              rng_kind: str = "xoshiro128plus", run_id: int = 0,
              hook=None, keep_grid_states: bool = False) -> EventTrace:
    """Simulate one clockless run over the configured horizon.

    Each p-bit owns one stream (id = run_id * n + p-bit) from which it
    draws its next attempt gap and its flip uniform, so traces are
    reproducible from (seed, rng_kind, run_id) alone.
    """
    n = network.num_pbits
    initial = np.asarray(initial)
    if initial.shape != (n,):
        raise ValueError(f"initial state length {initial.shape} != {n}")
    beta = config.beta if config.beta is not None else network.beta
    if hook is None:
        hook = observables.default_hook(network)
    indptr, indices, weights = network.neighbor_arrays()

    streams = [RngStream(rng_kind, seed, run_id * n + i) for i in range(n)]
    state = initial.astype(np.int8).copy()
    hist_t = [[0.0] for _ in range(n)]
    hist_v = [[int(state[i])] for i in range(n)]
    recent_attempts: list[deque] = [deque() for _ in range(n)]

    tau_n, tau_s = config.tau_n, config.tau_s

    def next_gap(i: int) -> float:
        if config.deterministic_intervals:
            return tau_n
        return streams[i].next_exponential(tau_n)

    heap = [(next_gap(i), i) for i in range(n)]
    heapq.heapify(heap)

    grid_times = np.arange(0.0, config.horizon + 0.5 * config.record_every,
                           config.record_every)
    grid_times = grid_times[grid_times <= config.horizon + 1e-12]
    grid_values = np.empty(len(grid_times))
    grid_states = (np.empty((len(grid_times), n), dtype=np.int8)
                   if keep_grid_states else None)
    grid_ptr = 0

    ev_t, ev_i, ev_s = [], [], []
    attempts = 0
    collisions = 0

    def flush_grid(up_to: float):
        nonlocal grid_ptr
        while grid_ptr < len(grid_times) and grid_times[grid_ptr] <= up_to:
            grid_values[grid_ptr] = hook(state[None, :])[0]
            if grid_states is not None:
                grid_states[grid_ptr] = state
            grid_ptr += 1

    while heap:
        t, i = heapq.heappop(heap)
        if t > config.horizon:
            break
        flush_grid(t - 1e-15)
        attempts += 1

        if tau_s > 0.0:
            cutoff = t - tau_s
            dq = recent_attempts[i]
            lo, hi = indptr[i], indptr[i + 1]
            for j in indices[lo:hi]:
                dq_j = recent_attempts[j]
                while dq_j and dq_j[0] <= cutoff:
                    dq_j.popleft()
                collisions += len(dq_j)
            while dq and dq[0] <= cutoff:
                dq.popleft()
            dq.append(t)

            fld = 0.0
            for j, w in zip(indices[lo:hi], weights[lo:hi]):
                tj = hist_t[j]
                k = bisect_right(tj, cutoff) - 1
                fld += w * hist_v[j][max(k, 0)]
        else:
            lo, hi = indptr[i], indptr[i + 1]
            fld = float(weights[lo:hi] @ state[indices[lo:hi]])

        u = streams[i].next_uniform()
        old = int(state[i])
        if config.neuron == "flip_exponential":
            x = -2.0 * beta * old * fld
            new = -old if (x >= 0.0 or np.exp(x) > u) else old
        else:
            new = 1 if np.tanh(beta * fld) - 2.0 * u + 1.0 > 0.0 else -1

        if new != old:
            state[i] = new
            if tau_s > 0.0:
                ht, hv = hist_t[i], hist_v[i]
                ht.append(t)
                hv.append(new)
                if len(ht) > 64:    # retain only the tau_s read window
                    k = bisect_right(ht, t - tau_s) - 1
                    if k > 0:
                        del ht[:k]
                        del hv[:k]
            if config.record_events:
                ev_t.append(t)
                ev_i.append(i)
                ev_s.append(new)

        heapq.heappush(heap, (t + next_gap(i), i))

    flush_grid(config.horizon)
    return EventTrace(
        num_pbits=n, tau_n=tau_n, tau_s=tau_s, horizon=config.horizon,
        event_times=np.asarray(ev_t), event_pbits=np.asarray(ev_i, dtype=np.int64),
        event_states=np.asarray(ev_s, dtype=np.int8), attempts=attempts,
        collisions=collisions, grid_times=grid_times,
        grid_values=grid_values, final_state=state,
        grid_states=grid_states)


def collision_rate(trace: EventTrace, network: ReplicatedNetwork) -> float:
    """Adjacent attempt pairs within tau_s, per p-bit per tau_s window.

    Estimates the probability that a p-bit and one of its d neighbours
    attempt within the same synapse-delay window, the quantity whose
    small-s law is roughly d * s^2.  Exactly zero when tau_s = 0.
    """
    if trace.attempts == 0:
        raise ValueError("trace records no attempts")
    if network.num_pbits != trace.num_pbits:
        raise ValueError("trace and network sizes disagree")
    windows = trace.num_pbits * trace.horizon / trace.tau_s \
        if trace.tau_s > 0 else np.inf
    return trace.collisions / windows if np.isfinite(windows) else 0.0


def run_async_ensemble(network, initial, runs: int, config: AsyncConfig, *,
                       seed: int = 0, rng_kind: str = "xoshiro128plus",
                       hook=None) -> list[EventTrace]:
    """Independent async runs with per-run disjoint stream blocks."""
    return [run_async(network, initial, config, seed=seed, rng_kind=rng_kind,
                      run_id=rid, hook=hook) for rid in range(runs)]


@dataclass
class ParityReport:
    """Sync-vs-async convergence comparison on one problem."""

    sync_sweeps: float | None
    async_tau: float | None
    ratio: float | None
    sync_g: float
    async_g: float
    s: float
    sync_colors: int


def async_convergence_equivalence(network, initial, config: AsyncConfig, *,
                                  runs: int = 400, sync_sweeps: int = 400,
                                  seed: int = 0) -> ParityReport:
    """Convergence time of the async engine (in tau_n units) against the
    colored sync engine (in sweeps) on the same problem.

    One async time unit tau_n carries n update attempts on average, the
    work of one sweep, so behavioral parity means comparable numbers.
    """
    from . import analysis
    from .engine_sync import SweepConfig, run_ensemble

    sync_cfg = SweepConfig(beta=config.beta, neuron=config.neuron,
                           sweeps=sync_sweeps, record_every=1)
    traces = run_ensemble(network, initial, runs, sync_cfg, seed=seed)
    sync_series = observables.ensemble_average(traces)
    sync_fit = analysis.fit_double_exp(
        sync_series, g_bounds=(0.0, observables.TWO_OVER_SQRT3))
    t_sync = analysis.convergence_time(sync_series, sync_fit)

    atraces = run_async_ensemble(network, initial, runs, config, seed=seed + 1)
    async_series = observables.ensemble_average(
        [_as_run_trace(t, k) for k, t in enumerate(atraces)])
    async_fit = analysis.fit_double_exp(
        async_series, g_bounds=(0.0, observables.TWO_OVER_SQRT3))
    t_async = analysis.convergence_time(async_series, async_fit)

    from .engine_sync import resolve_coloring
    ncolors = resolve_coloring(network).num_colors
    ratio = (t_async / t_sync) if (t_sync and t_async) else None
    return ParityReport(sync_sweeps=t_sync, async_tau=t_async, ratio=ratio,
                        sync_g=sync_fit.g, async_g=async_fit.g,
                        s=config.s, sync_colors=ncolors)


def _as_run_trace(trace: EventTrace, run_id: int):
    """View an async grid as a RunTrace so ensemble averaging applies."""
    from .engine_sync import RunTrace

    return RunTrace(run_id=run_id, sweeps=trace.grid_times,
                    time_ns=trace.grid_times * trace.tau_n,
                    values=trace.grid_values)
