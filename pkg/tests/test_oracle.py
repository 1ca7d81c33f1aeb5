"""Brute-force measurement oracle tests.

The oracle enumerates every outcome branch by projecting dense state
vectors, which makes it slow but assumption-free; these tests pin down its
internal consistency so it can serve as the reference for the fast
operator-string implementation.
"""

import numpy as np
import pytest

from haldane_mbqc.model import Aklt, Blocked, Xxz, blocked_layout, chain_dims
from haldane_mbqc.mps import aklt_mps, to_dense
from haldane_mbqc.oracle import (
    DenseState,
    blocked_regions,
    choi_matrix,
    enumerate_branches,
    exact_ground_state,
    fidelity_from_rho,
    rz_fidelity_oracle,
    rz_regions,
    unitary_fidelity_oracle,
)
from haldane_mbqc.spin_ops import rotation_gate


def aklt_dense(L):
    return DenseState(to_dense(aklt_mps(L)), chain_dims(Aklt(L=L)))


def random_dense_state(n_spin, seed):
    dims = (2,) + (3,) * n_spin + (2,)
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(int(np.prod(dims)))
    v = v + 1j * rng.standard_normal(v.size)
    return DenseState(v / np.linalg.norm(v), dims)


class TestGroundStateOracle:
    @pytest.mark.parametrize("L", [2, 3])
    def test_valence_bond_energy(self, L):
        result = exact_ground_state(Aklt(L=L))
        assert result.energy == pytest.approx(-2.0 / 3.0 * (L - 1) - 2.0, abs=1e-10)
        assert not result.degenerate
        assert result.gap > 1e-3

    def test_state_is_normalized_eigenvector(self):
        spec = Xxz(L=3, J=1.7, D=-0.6)
        result = exact_ground_state(spec)
        assert np.linalg.norm(result.state.vector) == pytest.approx(1.0, abs=1e-12)

    def test_blocked_chain_supported(self):
        result = exact_ground_state(Blocked(L=3, N=0, J=1.0, D=-10.0))
        assert result.state.n_spin == 3
        assert np.isfinite(result.energy)

    def test_iterative_path_matches_dense_path(self):
        # L=7 is past the dense-eigh cap, so this exercises the Lanczos
        # route; L=6 runs through eigh.  Energies must line up per site.
        dense = exact_ground_state(Xxz(L=6, J=1.0, D=0.0))
        sparse = exact_ground_state(Xxz(L=7, J=1.0, D=0.0))
        assert sparse.energy < dense.energy  # one more bond, lower energy
        assert sparse.energy / 7 == pytest.approx(dense.energy / 6, rel=0.05)


class TestBranchEnumeration:
    @pytest.mark.parametrize("theta", [0.0, 0.7, np.pi / 2])
    def test_probabilities_sum_to_one(self, theta):
        state = aklt_dense(2)
        branches = list(enumerate_branches(state, rz_regions(2, theta)))
        assert len(branches) == 9
        assert sum(b.probability for b in branches) == pytest.approx(1.0, abs=1e-12)

    def test_branch_count_and_labels(self):
        state = random_dense_state(2, seed=0)
        branches = list(enumerate_branches(state, rz_regions(2, 0.3)))
        labels = {b.outcomes for b in branches}
        assert len(labels) == 9
        assert all(len(o) == 2 for o in labels)

    def test_corrected_states_are_normalized(self):
        state = random_dense_state(2, seed=5)
        for b in enumerate_branches(state, rz_regions(2, 1.1)):
            if b.probability > 1e-12:
                assert np.linalg.norm(b.corrected_state) == pytest.approx(1.0, abs=1e-10)

    def test_choi_matrix_is_a_density_matrix(self):
        state = random_dense_state(3, seed=2)
        rho = choi_matrix(state, rz_regions(3, 0.9)).validate()
        assert np.trace(rho.matrix).real == pytest.approx(1.0, abs=1e-10)


class TestTeleportedRotation:
    @pytest.mark.parametrize("L", [2, 3])
    @pytest.mark.parametrize("theta", [0.0, 0.4, np.pi / 2, np.pi, 2.5])
    def test_valence_bond_branch_structure(self, L, theta):
        # On the exact resource every branch teleports the rotation exactly
        # (byproducts included) except the all-deferred branch, which occurs
        # with probability 3**-L and realizes the identity instead, fidelity
        # cos(theta/2)**2 against the target.
        from haldane_mbqc.oracle import TwoQubitDensityMatrix

        u = rotation_gate("z", theta, spin="half")
        state = aklt_dense(L)
        total = 0.0
        for b in enumerate_branches(state, rz_regions(L, theta)):
            rho = TwoQubitDensityMatrix(
                np.outer(b.corrected_state, b.corrected_state.conj())
            )
            f = fidelity_from_rho(rho, u)
            if b.outcomes == ("z",) * L:
                assert b.probability == pytest.approx(3.0**-L, abs=1e-12)
                assert f == pytest.approx(np.cos(theta / 2) ** 2, abs=1e-12)
            else:
                assert f == pytest.approx(1.0, abs=1e-12)
            total += b.probability * f
        assert total == pytest.approx(1.0 - (1.0 - np.cos(theta)) / (2 * 3.0**L), abs=1e-12)

    @pytest.mark.parametrize("L", [2, 3])
    @pytest.mark.parametrize("theta", [0.0, 0.4, np.pi / 2, np.pi, 2.5])
    def test_average_matches_closed_form_on_valence_bond_state(self, L, theta):
        want = 1.0 - (1.0 - np.cos(theta)) / (2 * 3.0**L)
        assert rz_fidelity_oracle(aklt_dense(L), theta) == pytest.approx(want, abs=1e-12)

    def test_fidelity_bounded_on_arbitrary_states(self):
        state = random_dense_state(2, seed=11)
        for theta in (0.0, 0.8, np.pi):
            f = rz_fidelity_oracle(state, theta)
            assert -1e-12 <= f <= 1.0 + 1e-12

    def test_fidelity_from_rho_on_pure_target(self):
        from haldane_mbqc.oracle import TwoQubitDensityMatrix

        u = rotation_gate("z", 0.6, spin="half")
        target = (u.T / np.sqrt(2.0)).reshape(4)
        pure = TwoQubitDensityMatrix(np.outer(target, target.conj()))
        assert fidelity_from_rho(pure, u) == pytest.approx(1.0, abs=1e-12)


class TestBlockedOracle:
    def test_identity_angles_on_strong_coupling_chain(self):
        spec = Blocked(L=3, N=0, J=10.0, D=0.0)
        gs = exact_ground_state(spec)
        layout = blocked_layout(spec)
        f = unitary_fidelity_oracle(gs.state, layout, 0.0, 0.0, 0.0)
        assert f == pytest.approx(1.0, abs=0.01)

    def test_branch_count_includes_junctions(self):
        spec = Blocked(L=3, N=1, J=1.0, D=0.0)
        gs = exact_ground_state(spec)
        regions = blocked_regions(blocked_layout(spec), 0.1, 0.2, 0.3)
        branches = list(enumerate_branches(gs.state, regions))
        assert len(branches) == 3**5

    def test_layout_mismatch_rejected(self):
        state = random_dense_state(3, seed=1)
        layout = blocked_layout(Blocked(L=6, N=0, J=1.0, D=0.0))
        with pytest.raises(ValueError):
            unitary_fidelity_oracle(state, layout, 0.0, 0.0, 0.0)


class TestDenseState:
    def test_size_validation(self):
        with pytest.raises(ValueError):
            DenseState(np.zeros(7), (2, 3, 2))

    def test_n_spin(self):
        assert aklt_dense(3).n_spin == 3
