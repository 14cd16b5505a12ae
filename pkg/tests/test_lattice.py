import collections
import itertools

import numpy as np
import pytest

import pbitmc as pb
from pbitmc import lattice as L
from pbitmc import observables as O

TWO_OVER_SQRT3 = 2.0 / np.sqrt(3.0)


def brute_force_triangles(lattice):
    """Independent 3-clique search on the contracted cell graph, filtered to
    one basis per sublattice."""
    n = lattice.num_bases
    cell_sub = np.empty(n, dtype=int)
    cell_sub[lattice.basis] = lattice.sublattice
    adj = np.zeros((n, n), dtype=bool)
    for a, b, w in zip(lattice.edge_i, lattice.edge_j, lattice.edge_coupling):
        ca, cb = lattice.basis[a], lattice.basis[b]
        if ca != cb and w > 0:
            adj[ca, cb] = adj[cb, ca] = True
    tris = set()
    for a, b, c in itertools.combinations(range(n), 3):
        if adj[a, b] and adj[b, c] and adj[a, c] \
                and sorted(cell_sub[[a, b, c]]) == [0, 1, 2]:
            tris.add((a, b, c))
    return tris


class TestSquareOctagonal:
    def test_spin_count_L6(self, sq_oct_6):
        assert sq_oct_6.num_spins == 144

    def test_spin_count_L15(self):
        lat = pb.build_square_octagonal(15)
        assert lat.num_spins == 1440
        assert lat.num_spins * 10 == 14400

    @pytest.mark.parametrize("L", [6, 9])
    def test_counts_formula(self, L):
        lat = pb.build_square_octagonal(L)
        assert lat.num_spins == 4 * L * (2 * L - 6)
        assert lat.num_bases == (2 * L - 6) * L

    def test_degree_structure(self, sq_oct_6):
        hist = collections.Counter(sq_oct_6.degrees().tolist())
        rows, cols = sq_oct_6.rows, sq_oct_6.cols
        # every bulk spin has degree 3; open-boundary spins degree 1 or 2
        assert hist[3] == sq_oct_6.num_spins - 3 * rows
        assert hist[1] == rows          # one per rightmost-column cell
        assert hist[2] == 2 * rows      # two per leftmost-column cell
        assert set(hist) == {1, 2, 3}

    def test_handshake_and_connected(self, sq_oct_6):
        deg = sq_oct_6.degrees()
        assert deg.sum() == 2 * sq_oct_6.num_edges
        adj = [[] for _ in range(sq_oct_6.num_spins)]
        for a, b in zip(sq_oct_6.edge_i, sq_oct_6.edge_j):
            adj[a].append(b)
            adj[b].append(a)
        seen, stack = {0}, [0]
        while stack:
            u = stack.pop()
            for v in adj[u]:
                if v not in seen:
                    seen.add(v)
                    stack.append(v)
        assert len(seen) == sq_oct_6.num_spins

    def test_coupling_values(self, sq_oct_6):
        vals = set(np.round(sq_oct_6.edge_coupling, 12).tolist())
        assert vals == {-1.8, 1.0, 0.5}
        fm = sq_oct_6.edge_coupling == L.J_FM
        # FM bonds stay within a cell, AFM bonds cross cells
        same_cell = (sq_oct_6.basis[sq_oct_6.edge_i]
                     == sq_oct_6.basis[sq_oct_6.edge_j])
        assert np.array_equal(fm, same_cell)

    def test_boundary_bonds_halved(self, sq_oct_6):
        cols = sq_oct_6.cols
        for a, b, w in zip(sq_oct_6.edge_i, sq_oct_6.edge_j,
                           sq_oct_6.edge_coupling):
            if w <= 0:
                continue
            ca, cb = sq_oct_6.basis[a], sq_oct_6.basis[b]
            on_boundary_column = (ca % cols == cb % cols
                                  and ca % cols in (0, cols - 1))
            assert (w == 0.5) == on_boundary_column

    def test_plaquette_faces_are_squares_and_octagons(self, sq_oct_6):
        afm = {}
        for a, b, w in zip(sq_oct_6.edge_i.tolist(), sq_oct_6.edge_j.tolist(),
                           sq_oct_6.edge_coupling.tolist()):
            if w > 0:
                ca, cb = a // 4, b // 4
                afm[(ca, cb)] = a % 4
                afm[(cb, ca)] = b % 4
        sizes = collections.Counter()
        for p in sq_oct_6.plaquettes:
            cells = p.bases()
            fm_edges = 0
            for c in cells:
                ends = [afm[(c, d)] for d in cells if d != c]
                fm_edges += abs(ends[0] - ends[1])
            sizes[3 + fm_edges] += 1
        assert sizes == {4: 30, 8: 30}

    def test_base_reduction_is_triangular(self, sq_oct_6, tri_6x6):
        contracted = L.contract_to_base(sq_oct_6)
        tri_pairs = {(min(a, b), max(a, b))
                     for a, b in zip(tri_6x6.edge_i, tri_6x6.edge_j)}
        assert contracted == tri_pairs

    def test_rejects_small_L(self):
        with pytest.raises(ValueError):
            pb.build_square_octagonal(5)


class TestTriangular:
    def test_6x6_size(self, tri_6x6):
        assert tri_6x6.num_spins == 36

    def test_bulk_frustration(self, tri_6x6):
        # every plaquette has three AFM bonds among its cells
        for p in tri_6x6.plaquettes:
            for a, b in itertools.combinations(p.bases(), 2):
                w = [w for i, j, w in tri_6x6.edges
                     if {i, j} == {a, b}]
                assert len(w) == 1 and w[0] > 0

    def test_2x2_plaquettes_match_brute_force(self):
        lat = pb.build_triangular(2, 2)
        got = {tuple(sorted(p.bases())) for p in pb.enumerate_plaquettes(lat)}
        assert got == brute_force_triangles(lat)
        assert got  # nonempty

    def test_rejects_degenerate(self):
        with pytest.raises(ValueError):
            pb.build_triangular(1, 4)


class TestEnumeratePlaquettes:
    def test_one_basis_per_sublattice(self, sq_oct_6):
        cell_sub = np.empty(sq_oct_6.num_bases, dtype=int)
        cell_sub[sq_oct_6.basis] = sq_oct_6.sublattice
        for p in sq_oct_6.plaquettes:
            labels = sorted(cell_sub[list(p.bases())])
            assert labels == [L.RED, L.GREEN, L.BLUE]

    def test_L6_count_matches_brute_force(self, sq_oct_6):
        got = {tuple(sorted(p.bases()))
               for p in pb.enumerate_plaquettes(sq_oct_6)}
        expected = brute_force_triangles(sq_oct_6)
        assert got == expected
        assert len(sq_oct_6.plaquettes) == len(expected) == 60

    def test_no_afm_bonds_gives_empty(self):
        lat = L.custom_graph(4, [(0, 1, -1.0), (1, 2, -1.0)])
        assert pb.enumerate_plaquettes(lat) == []


class TestInitialStates:
    @pytest.mark.parametrize("builder", ["square_octagonal", "triangular"])
    def test_ordered_maximal(self, builder, sq_oct_6, tri_6x6):
        lat = sq_oct_6 if builder == "square_octagonal" else tri_6x6
        st = pb.construct_initial_state(lat, "ordered")
        z = abs(O.config_pseudospin(st, lat, 1))
        assert abs(z - TWO_OVER_SQRT3) < 1e-12

    @pytest.mark.parametrize("kind", ["ccw", "cw"])
    def test_wound_states_zero(self, kind, sq_oct_6):
        st = pb.construct_initial_state(sq_oct_6, kind)
        assert abs(O.config_pseudospin(st, sq_oct_6, 1)) < 1e-12

    def test_windings(self, sq_oct_6):
        for kind, expect in (("ordered", 0), ("ccw", 1), ("cw", -1)):
            st = pb.construct_initial_state(sq_oct_6, kind)
            assert pb.winding_number(sq_oct_6, st) == expect

    def test_windings_L9(self):
        lat = pb.build_square_octagonal(9)
        for kind, expect in (("ccw", 1), ("cw", -1)):
            st = pb.construct_initial_state(lat, kind)
            assert abs(O.config_pseudospin(st, lat, 1)) < 1e-12
            assert pb.winding_number(lat, st) == expect

    def test_degenerate_ground_states_small_exhaustive(self):
        # 6 periodic rows x 3 open columns: 18 spins, full enumeration
        lat = pb.build_triangular(6, 3)
        n = lat.num_spins
        codes = np.arange(1 << n, dtype=np.uint32)
        bits = ((codes[:, None] >> np.arange(n)[None, :]) & 1).astype(np.int8)
        m = 2 * bits - 1
        energies = np.einsum("e,se,se->s", lat.edge_coupling,
                             m[:, lat.edge_i], m[:, lat.edge_j])
        e_min = energies.min()
        for kind in ("ordered", "ccw", "cw"):
            st = pb.construct_initial_state(lat, kind)
            assert abs(pb.ising_energy(lat, st) - e_min) < 1e-9

    def test_same_energy_all_kinds_L6(self, sq_oct_6):
        energies = [pb.ising_energy(sq_oct_6,
                                    pb.construct_initial_state(sq_oct_6, k))
                    for k in ("ordered", "ccw", "cw")]
        assert max(energies) - min(energies) < 1e-9

    def test_wound_state_violates_one_bond_per_plaquette(self, tri_6x6):
        st = pb.construct_initial_state(tri_6x6, "ccw")
        for p in tri_6x6.plaquettes:
            viol = 0
            for a, b in itertools.combinations(p.bases(), 2):
                if st[a] * st[b] > 0:
                    viol += 1
            assert viol == 1

    def test_rejects_bad_kind_and_shape(self, sq_oct_6):
        with pytest.raises(ValueError):
            pb.construct_initial_state(sq_oct_6, "spiral")
        small = pb.build_triangular(3, 6)   # only 3 periodic rows
        with pytest.raises(ValueError):
            pb.construct_initial_state(small, "ccw")
        with pytest.raises(ValueError):
            pb.construct_initial_state(L.custom_graph(3, []), "ordered")


class TestEnergy:
    def test_energy_convention(self):
        lat = L.custom_graph(2, [(0, 1, -1.8)])
        aligned = np.array([1, 1])
        assert pb.ising_energy(lat, aligned) == pytest.approx(-1.8)
        anti = np.array([1, -1])
        assert pb.ising_energy(lat, anti) == pytest.approx(1.8)

    def test_length_check(self, tri_6x6):
        with pytest.raises(ValueError):
            pb.ising_energy(tri_6x6, np.ones(7))
