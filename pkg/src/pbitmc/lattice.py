"""Frustrated lattice construction: square-octagonal qubit lattice and its
triangular base lattice.

Geometry
--------
Both builders share one cell grid: ``rows x cols`` basis cells, row-major
basis index ``b = i*cols + j``, periodic in the row direction (i wraps mod
rows; for the square-octagonal family rows = 2L-6, which is always a
multiple of six) and open in the column direction.  Cell (i, j) is
AFM-coupled to its six triangular neighbours E, W, N, S, NE, SW where N/S
step the (periodic) row index and NE/SW step both indices.

For the square-octagonal lattice each cell is a chain of four FM-coupled
qubits q0-q1-q2-q3.  The six AFM bond endpoints of a cell sit at
q0:{W, N}, q1:{SW}, q2:{S}, q3:{E, NE}: every bulk qubit then has degree
3, one triangle family closes into squares (three AFM bonds plus one FM
bond) and the other into octagons (three AFM plus five FM), the rightmost
column exposes a degree-1 qubit per cell (q3 loses both its bonds) and
the leftmost column degree-2 qubits.  Contracting each chain recovers the
triangular base lattice.

Sign convention
---------------
Edge couplings are stored raw, exactly as quoted for the problem
definition: FM bonds carry ``J = -1.8``, bulk AFM bonds ``J = +1.0`` and
the in-row AFM bonds of the two open-boundary rows ``J = +0.5``.  Under
this raw convention the energy of a configuration is

    E(m) = sum_edges J_ij * m_i * m_j

so negative couplings favour alignment and positive couplings favour
anti-alignment (see :func:`ising_energy`).  Sampler-side modules negate
the raw values once; :data:`COUPLING_SIGN` is that global flag.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

J_FM = -1.8
J_AFM_BULK = 1.0
J_AFM_BOUNDARY = 0.5

RED, GREEN, BLUE = 0, 1, 2
SUBLATTICE_NAMES = ("red", "green", "blue")

# Raw couplings use the "energy = +J*m*m" convention; samplers use
# "energy = -W*m*m".  Effective sampler weights are COUPLING_SIGN * raw.
COUPLING_SIGN = -1.0

# AFM endpoint of each bond family inside the source / target chain:
# E joins q3 to the neighbour's W slot q0, N joins q0 to the S slot q2,
# NE joins q3 to the SW slot q1.
_EDGE_SLOTS = {"E": (3, 0), "N": (0, 2), "NE": (3, 1)}

# Ground-state orientation patterns: phase k*60 deg <-> per-sublattice signs.
_PATTERN_PLUS = {RED: (0, 1, 5), GREEN: (1, 2, 3), BLUE: (3, 4, 5)}


@dataclass(frozen=True)
class Plaquette:
    """One frustrated triangle of basis cells, keyed by sublattice role."""

    red_basis: int
    green_basis: int
    blue_basis: int

    def bases(self) -> tuple[int, int, int]:
        return (self.red_basis, self.green_basis, self.blue_basis)


@dataclass
class LatticeGraph:
    """Coupling graph of one lattice instance.

    ``edge_i``, ``edge_j`` and ``edge_coupling`` hold one entry per
    undirected edge with raw couplings (see module docstring).  ``basis``
    maps each spin to its cell, ``sublattice`` carries the per-spin
    red/green/blue label inherited from the cell.
    """

    kind: str
    rows: int
    cols: int
    spins_per_basis: int
    num_spins: int
    edge_i: np.ndarray
    edge_j: np.ndarray
    edge_coupling: np.ndarray
    sublattice: np.ndarray
    basis: np.ndarray
    plaquettes: list[Plaquette]
    periodic_axis: str = "rows"
    _basis_members: np.ndarray | None = field(default=None, repr=False)

    @property
    def num_bases(self) -> int:
        return self.rows * self.cols

    @property
    def num_edges(self) -> int:
        return len(self.edge_coupling)

    @property
    def edges(self) -> list[tuple[int, int, float]]:
        return list(zip(self.edge_i.tolist(), self.edge_j.tolist(),
                        self.edge_coupling.tolist()))

    def basis_members(self) -> np.ndarray:
        """(num_bases, spins_per_basis) array of spin indices per cell."""
        if self._basis_members is None:
            order = np.argsort(self.basis, kind="stable")
            self._basis_members = order.reshape(self.num_bases,
                                                self.spins_per_basis)
        return self._basis_members

    def degrees(self) -> np.ndarray:
        deg = np.zeros(self.num_spins, dtype=np.int64)
        np.add.at(deg, self.edge_i, 1)
        np.add.at(deg, self.edge_j, 1)
        return deg

    def basis_grid_position(self, b: int) -> tuple[int, int]:
        return divmod(b, self.cols)


def _cell_edges(rows: int, cols: int):
    """Yield (family, src_cell, dst_cell, boundary_flag) for the AFM bonds.

    Families E, N, NE are emitted once per source cell; W/S/SW bonds are
    their mirrors.  The row direction is periodic (N wraps), columns are
    open.  ``boundary_flag`` marks the in-column bonds of the leftmost and
    rightmost columns, whose couplings are halved.
    """
    seen = set()
    for i in range(rows):
        for j in range(cols):
            src = i * cols + j
            ip = (i + 1) % rows
            if j + 1 < cols:
                yield "E", src, i * cols + (j + 1), False
                yield "NE", src, ip * cols + (j + 1), False
            dst = ip * cols + j
            key = (min(src, dst), max(src, dst))
            if dst != src and key not in seen:
                seen.add(key)
                yield "N", src, dst, j == 0 or j == cols - 1


def _enumerate_grid_plaquettes(rows: int, cols: int) -> list[tuple[int, int, int]]:
    """Triangles of the cell grid, including those closed through the
    periodic seam: two per cell for every column pair."""
    tris = []
    for i in range(rows):
        ip = (i + 1) % rows
        for j in range(cols - 1):
            a, b, c = i * cols + j, i * cols + j + 1, ip * cols + j + 1
            tris.append((a, b, c))
            a, b, c = i * cols + j, ip * cols + j, ip * cols + j + 1
            tris.append((a, b, c))
    return tris


def _sublattice_of_cell(rows: int, cols: int) -> np.ndarray:
    i, j = np.divmod(np.arange(rows * cols), cols)
    return ((i + j) % 3).astype(np.int8)


def _plaquettes_from_cells(cell_sub: np.ndarray, tris) -> list[Plaquette]:
    plaqs = []
    for tri in tris:
        labels = [int(cell_sub[b]) for b in tri]
        if sorted(labels) != [RED, GREEN, BLUE]:
            continue  # improper labelling (only possible for cols % 3 != 0)
        by_role = dict(zip(labels, tri))
        plaqs.append(Plaquette(by_role[RED], by_role[GREEN], by_role[BLUE]))
    return plaqs


def build_square_octagonal(L: int) -> LatticeGraph:
    """Square-octagonal qubit lattice of 4L(2L-6) spins.

    ``(2L-6) x L`` cells of four FM-coupled qubits each, periodic along
    the (2L-6)-cell row direction, open along the columns, with halved
    AFM couplings on the in-column bonds of the two open columns.
    """
    if L < 6:
        raise ValueError(f"L must be >= 6 (got {L}): 2L-6 rows degenerate")
    rows, cols = 2 * L - 6, L
    n_cells = rows * cols
    spb = 4
    num_spins = n_cells * spb

    ei, ej, ew = [], [], []
    # FM chains within each cell
    for b in range(n_cells):
        base = b * spb
        for q in range(spb - 1):
            ei.append(base + q)
            ej.append(base + q + 1)
            ew.append(J_FM)
    # AFM bonds between cells
    for fam, src, dst, on_boundary in _cell_edges(rows, cols):
        qs, qd = _EDGE_SLOTS[fam]
        ei.append(src * spb + qs)
        ej.append(dst * spb + qd)
        ew.append(J_AFM_BOUNDARY if on_boundary else J_AFM_BULK)

    cell_sub = _sublattice_of_cell(rows, cols)
    tris = _enumerate_grid_plaquettes(rows, cols)
    basis = np.repeat(np.arange(n_cells), spb)
    lat = LatticeGraph(
        kind="square_octagonal",
        rows=rows,
        cols=cols,
        spins_per_basis=spb,
        num_spins=num_spins,
        edge_i=np.asarray(ei, dtype=np.int64),
        edge_j=np.asarray(ej, dtype=np.int64),
        edge_coupling=np.asarray(ew, dtype=np.float64),
        sublattice=cell_sub[basis],
        basis=basis,
        plaquettes=_plaquettes_from_cells(cell_sub, tris),
    )
    return lat


def build_triangular(rows: int, cols: int) -> LatticeGraph:
    """AFM triangular lattice, one spin per site: the base lattice of the
    square-octagonal construction.  |J| = 1 in the bulk, 0.5 on the
    in-column bonds of the two open columns; periodic in the row
    direction."""
    if rows < 2 or cols < 2:
        raise ValueError(f"degenerate triangular size {rows}x{cols}")
    n = rows * cols
    ei, ej, ew = [], [], []
    for fam, src, dst, on_boundary in _cell_edges(rows, cols):
        ei.append(src)
        ej.append(dst)
        ew.append(J_AFM_BOUNDARY if on_boundary else J_AFM_BULK)
    cell_sub = _sublattice_of_cell(rows, cols)
    tris = _enumerate_grid_plaquettes(rows, cols)
    lat = LatticeGraph(
        kind="triangular",
        rows=rows,
        cols=cols,
        spins_per_basis=1,
        num_spins=n,
        edge_i=np.asarray(ei, dtype=np.int64),
        edge_j=np.asarray(ej, dtype=np.int64),
        edge_coupling=np.asarray(ew, dtype=np.float64),
        sublattice=cell_sub.copy(),
        basis=np.arange(n),
        plaquettes=_plaquettes_from_cells(cell_sub, tris),
    )
    return lat


def custom_graph(num_spins: int, edges) -> LatticeGraph:
    """Arbitrary small coupling graph (raw convention), one spin per basis.

    Only the two lattice builders carry grid geometry; custom graphs are
    for fixtures and experiments and do not support the prescribed initial
    states or plaquette observables.
    """
    ei, ej, ew = [], [], []
    for i, j, w in edges:
        if not (0 <= i < num_spins and 0 <= j < num_spins) or i == j:
            raise ValueError(f"bad edge ({i}, {j})")
        ei.append(i)
        ej.append(j)
        ew.append(w)
    return LatticeGraph(
        kind="custom",
        rows=1,
        cols=num_spins,
        spins_per_basis=1,
        num_spins=num_spins,
        edge_i=np.asarray(ei, dtype=np.int64),
        edge_j=np.asarray(ej, dtype=np.int64),
        edge_coupling=np.asarray(ew, dtype=np.float64),
        sublattice=np.zeros(num_spins, dtype=np.int8),
        basis=np.arange(num_spins),
        plaquettes=[],
    )


def enumerate_plaquettes(lattice: LatticeGraph) -> list[Plaquette]:
    """All triangles of mutually AFM-adjacent cells carrying one basis per
    sublattice, including triangles closed through the periodic seam.

    Recomputed from the cell adjacency (not the cached list) so it can act
    as a check on the construction.
    """
    n_cells = lattice.num_bases
    adj = [set() for _ in range(n_cells)]
    for a, b, w in zip(lattice.edge_i, lattice.edge_j, lattice.edge_coupling):
        ca, cb = int(lattice.basis[a]), int(lattice.basis[b])
        if ca != cb and w > 0:
            adj[ca].add(cb)
            adj[cb].add(ca)
    cell_sub = np.empty(n_cells, dtype=np.int8)
    cell_sub[lattice.basis] = lattice.sublattice
    plaqs = []
    for a in range(n_cells):
        for b in adj[a]:
            if b <= a:
                continue
            for c in adj[a] & adj[b]:
                if c <= b:
                    continue
                labels = [int(cell_sub[x]) for x in (a, b, c)]
                if sorted(labels) != [RED, GREEN, BLUE]:
                    continue
                by_role = dict(zip(labels, (a, b, c)))
                plaqs.append(Plaquette(by_role[RED], by_role[GREEN],
                                       by_role[BLUE]))
    return plaqs


def _orientation_steps(rows: int, winding: int) -> np.ndarray:
    """Per-row orientation index k_i stepping through the six ground-state
    orientations with total winding +-1 around the periodic direction."""
    k = np.floor(6 * np.arange(rows) / rows).astype(np.int64)
    return (winding * k) % 6


def construct_initial_state(lattice: LatticeGraph, kind: str) -> np.ndarray:
    """Prescribed classical start configurations.

    ``ordered``   all plaquette pseudospins aligned, |zeta_conf| = 2/sqrt(3)
    ``ccw``/``cw`` pseudospin orientation winds once (+1 / -1) around the
    periodic row direction, |zeta_conf| = 0; requires >= 6 periodic rows
    so adjacent rows differ by at most one 60-degree step.

    Returns an int8 vector of +-1 over the lattice spins (one replica).
    """
    if kind not in ("ordered", "ccw", "cw"):
        raise ValueError(f"unknown initial state kind {kind!r}")
    if lattice.kind not in ("square_octagonal", "triangular"):
        raise ValueError(f"no prescribed states for {lattice.kind!r} graphs")
    if kind == "ordered":
        k_of_row = np.zeros(lattice.rows, dtype=np.int64)
    else:
        if lattice.rows < 6:
            raise ValueError(
                f"{kind} state needs >= 6 periodic rows (got {lattice.rows})")
        k_of_row = _orientation_steps(lattice.rows, +1 if kind == "ccw" else -1)

    cell_values = np.empty(lattice.num_bases, dtype=np.int8)
    cell_sub = np.empty(lattice.num_bases, dtype=np.int8)
    cell_sub[lattice.basis] = lattice.sublattice
    for b in range(lattice.num_bases):
        i, _ = divmod(b, lattice.cols)
        k = int(k_of_row[i])
        plus = k in _PATTERN_PLUS[int(cell_sub[b])]
        cell_values[b] = 1 if plus else -1
    return cell_values[lattice.basis].copy()


def ising_energy(lattice: LatticeGraph, values: np.ndarray) -> float:
    """Configuration energy under the raw convention E = sum J_ij m_i m_j."""
    values = np.asarray(values)
    if values.shape != (lattice.num_spins,):
        raise ValueError(
            f"state length {values.shape} != ({lattice.num_spins},)")
    return float(np.sum(lattice.edge_coupling
                        * values[lattice.edge_i] * values[lattice.edge_j]))


def contract_to_base(lattice: LatticeGraph) -> set[tuple[int, int]]:
    """Cell-level edge set obtained by contracting each FM chain."""
    pairs = set()
    for a, b, w in zip(lattice.edge_i, lattice.edge_j, lattice.edge_coupling):
        ca, cb = int(lattice.basis[a]), int(lattice.basis[b])
        if ca != cb:
            pairs.add((min(ca, cb), max(ca, cb)))
    return pairs


def _plaquette_anchor_row(lattice: LatticeGraph, plq: Plaquette) -> int:
    rows = lattice.rows
    rs = {b // lattice.cols for b in plq.bases()}
    if len(rs) == 1:
        return next(iter(rs))
    a, b = sorted(rs)
    return a if (a + 1) % rows == b else b


def winding_number(lattice: LatticeGraph, values: np.ndarray) -> int:
    """Net pseudospin winding around the periodic row direction.

    Accumulates wrapped phase increments of the per-row mean plaquette
    pseudospin; meaningful for configurations near a classical ground state
    (each row must have a nonzero mean pseudospin).
    """
    from .observables import plaquette_pseudospin

    members = lattice.basis_members()
    m_av = np.asarray(values, dtype=np.float64)[members].mean(axis=1)
    row_sum = np.zeros(lattice.rows, dtype=np.complex128)
    for plq in lattice.plaquettes:
        z = plaquette_pseudospin(m_av[plq.red_basis], m_av[plq.green_basis],
                                 m_av[plq.blue_basis])
        row_sum[_plaquette_anchor_row(lattice, plq)] += z
    if np.any(np.abs(row_sum) < 1e-12):
        raise ValueError("row pseudospin vanishes; winding undefined")
    theta = np.angle(row_sum)
    dtheta = np.diff(np.concatenate([theta, theta[:1]]))
    dtheta = (dtheta + np.pi) % (2 * np.pi) - np.pi
    return int(round(dtheta.sum() / (2 * np.pi)))
