"""Probabilistic-bit emulator for discrete-time path-integral Monte Carlo
on frustrated Ising lattices, with graph-colored synchronous and clockless
asynchronous update engines."""

from .analysis import (FitResult, ScalingResult, convergence_time,
                       fit_double_exp, scaling_fit, wallclock_projection)
from .coloring import Coloring, greedy_color, two_color, verify_coloring
from .engine_async import (AsyncConfig, EventTrace, async_convergence_equivalence,
                           collision_rate, run_async, run_async_ensemble)
from .engine_sync import (RunTrace, SweepConfig, chromatic_sweep,
                          neuron_flip_exp, neuron_tanh, run_ensemble,
                          synapse_delta_e)
from .lattice import (LatticeGraph, Plaquette, build_square_octagonal,
                      build_triangular, construct_initial_state,
                      enumerate_plaquettes, ising_energy, winding_number)
from .observables import (EnsembleSeries, basis_average, config_pseudospin,
                          ensemble_average, plaquette_pseudospin)
from .oracle import (ExactDistribution, decay_series, exact_boltzmann,
                     transition_matrix, tv_distance)
from .rng import RngStream, StreamBank, split
from .trotter import (ReplicatedNetwork, classical_energy, classical_network,
                      replica_coupling, replicate_state, trotterize)

__version__ = "0.1.0"
