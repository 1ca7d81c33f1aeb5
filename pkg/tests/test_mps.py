"""MPS container tests: canonical forms, dense round trips, and the exact
valence-bond construction."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from haldane_mbqc.mps import (
    DENSE_CAP,
    Mps,
    aklt_mps,
    canonicalize,
    expect_string,
    from_dense,
    inner,
    load_mps,
    norm,
    save_mps,
    to_dense,
)
from haldane_mbqc.spin_ops import parity_op, pauli


def random_dense(dims, seed, complex_=True):
    rng = np.random.default_rng(seed)
    total = int(np.prod(dims))
    v = rng.standard_normal(total)
    if complex_:
        v = v + 1j * rng.standard_normal(total)
    return v / np.linalg.norm(v)


def qubit_chain_dims(n_spin):
    return (2,) + (3,) * n_spin + (2,)


small_chains = st.lists(st.sampled_from([2, 3]), min_size=2, max_size=5)


class TestConstruction:
    def test_bond_mismatch_rejected(self):
        good = np.zeros((2, 1, 2))
        bad = np.zeros((2, 3, 1))
        with pytest.raises(ValueError):
            Mps([good, bad])

    def test_rank_validated(self):
        with pytest.raises(ValueError):
            Mps([np.zeros((2, 1))])

    def test_properties(self):
        state = aklt_mps(3)
        assert state.n_sites == 5
        assert state.phys_dims == (2, 3, 3, 3, 2)
        assert state.bond_dims == (2, 2, 2, 2)

    def test_copy_is_deep(self):
        state = aklt_mps(2)
        clone = state.copy()
        clone.tensors[0][0, 0, 0] += 1.0
        assert state.tensors[0][0, 0, 0] != clone.tensors[0][0, 0, 0]


class TestValenceBondState:
    @pytest.mark.parametrize("L", [1, 2, 4, 6])
    def test_unit_norm(self, L):
        assert norm(aklt_mps(L)) == pytest.approx(1.0, abs=1e-13)

    def test_rejects_empty_chain(self):
        with pytest.raises(ValueError):
            aklt_mps(0)

    def test_dense_vector_is_parity_string_eigenstate(self):
        # The bare string sigma_w (x) prod parity_w (x) sigma_w has the state
        # as a -1 eigenvector for every axis; string_order flips the sign so
        # the quantized order parameter reads +1.
        L = 3
        state = aklt_mps(L)
        psi = to_dense(state)
        for w in "xyz":
            ops = [pauli(w)] + [parity_op(w)] * L + [pauli(w)]
            m = ops[0]
            for op in ops[1:]:
                m = np.kron(m, op)
            np.testing.assert_allclose(m @ psi, -psi, atol=1e-12)


class TestDenseRoundTrip:
    @given(dims=small_chains, seed=st.integers(0, 9999))
    @settings(max_examples=25)
    def test_from_dense_to_dense(self, dims, seed):
        v = random_dense(dims, seed)
        state = from_dense(v, dims)
        np.testing.assert_allclose(to_dense(state), v, atol=1e-12)

    def test_truncation_reduces_bond(self):
        v = random_dense((3, 3, 3, 3), 7)
        full = from_dense(v, (3, 3, 3, 3))
        cut = from_dense(v, (3, 3, 3, 3), max_bond=2)
        assert max(cut.bond_dims) == 2
        assert max(full.bond_dims) > 2

    def test_size_mismatch_rejected(self):
        with pytest.raises(ValueError):
            from_dense(np.zeros(5), (2, 3))

    def test_dense_cap_enforced(self):
        big = aklt_mps(9)  # 4 * 3**9 amplitudes, past the cap
        assert int(np.prod(big.phys_dims)) > DENSE_CAP
        with pytest.raises(ValueError):
            to_dense(big)


class TestOverlapsAndExpectations:
    @given(seed=st.integers(0, 9999))
    @settings(max_examples=25)
    def test_inner_matches_dense_dot(self, seed):
        dims = qubit_chain_dims(2)
        va, vb = random_dense(dims, seed), random_dense(dims, seed + 1)
        a, b = from_dense(va, dims), from_dense(vb, dims)
        assert inner(a, b) == pytest.approx(np.vdot(va, vb), abs=1e-12)

    def test_inner_requires_matching_chain(self):
        with pytest.raises(ValueError):
            inner(aklt_mps(2), aklt_mps(3))

    @given(seed=st.integers(0, 9999))
    @settings(max_examples=20)
    def test_expect_string_matches_dense_sandwich(self, seed):
        dims = qubit_chain_dims(2)
        v = random_dense(dims, seed)
        state = from_dense(v, dims)
        rng = np.random.default_rng(seed + 13)
        ops = [rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d)) for d in dims]
        full = ops[0]
        for op in ops[1:]:
            full = np.kron(full, op)
        want = np.vdot(v, full @ v)
        assert expect_string(state, ops) == pytest.approx(want, abs=1e-11)

    def test_mapping_and_sequence_forms_agree(self):
        state = aklt_mps(3)
        sz2 = np.diag([1.0, 0.0, 1.0])
        seq = [None, None, sz2, None, None]
        assert expect_string(state, seq) == pytest.approx(
            expect_string(state, {2: sz2}), abs=1e-14
        )

    def test_expect_string_validates_sites(self):
        state = aklt_mps(2)
        with pytest.raises(ValueError):
            expect_string(state, {9: np.eye(3)})
        with pytest.raises(ValueError):
            expect_string(state, [None])


class TestCanonicalize:
    @pytest.mark.parametrize("center", [0, 2, 4])
    def test_isometry_conditions(self, center):
        dims = qubit_chain_dims(3)
        state = from_dense(random_dense(dims, 21), dims)
        canon = canonicalize(state, center)
        assert canon.center == center
        for i, t in enumerate(canon.tensors):
            d, dl, dr = t.shape
            if i < center:
                m = t.reshape(d * dl, dr)
                np.testing.assert_allclose(m.conj().T @ m, np.eye(dr), atol=1e-12)
            elif i > center:
                m = t.transpose(1, 0, 2).reshape(dl, d * dr)
                np.testing.assert_allclose(m @ m.conj().T, np.eye(dl), atol=1e-12)

    def test_state_is_unchanged(self):
        dims = qubit_chain_dims(2)
        v = random_dense(dims, 3)
        state = from_dense(v, dims)
        for center in range(len(dims)):
            np.testing.assert_allclose(to_dense(canonicalize(state, center)), v, atol=1e-12)

    def test_center_out_of_range(self):
        with pytest.raises(ValueError):
            canonicalize(aklt_mps(2), 99)


class TestSaveLoad:
    def test_round_trip_complex(self, tmp_path):
        dims = qubit_chain_dims(2)
        state = canonicalize(from_dense(random_dense(dims, 5), dims), 1)
        path = tmp_path / "state.mps"
        save_mps(state, str(path))
        back = load_mps(str(path))
        assert back.center == state.center
        assert back.phys_dims == state.phys_dims
        for a, b in zip(state.tensors, back.tensors):
            np.testing.assert_array_equal(a, b)

    def test_real_state_stays_real(self, tmp_path):
        state = aklt_mps(2)
        assert all(t.dtype == np.float64 for t in state.tensors)
        path = tmp_path / "real.mps"
        save_mps(state, str(path))
        back = load_mps(str(path))
        assert all(t.dtype == np.float64 for t in back.tensors)
        assert abs(inner(state, back)) == pytest.approx(1.0, abs=1e-14)

    def test_rejects_foreign_file(self, tmp_path):
        path = tmp_path / "junk.mps"
        path.write_bytes(b"not an mps container")
        with pytest.raises(ValueError):
            load_mps(str(path))
