"""Hamiltonian construction tests.

The MPO builder and the dense Kronecker construction are written
independently, so comparing them end to end is the main correctness check
for both.
"""

import numpy as np
import pytest

from haldane_mbqc.dmrg import random_mps
from haldane_mbqc.model import (
    Aklt,
    Blbq,
    Blocked,
    Xxz,
    apply_mpo,
    blocked_layout,
    build_mpo,
    chain_dims,
    dense_hamiltonian,
    expect_mpo,
    local_terms,
    mpo_to_dense,
    n_spin_sites,
)
from haldane_mbqc.mps import aklt_mps, from_dense, inner, to_dense

SMALL_SPECS = [
    Aklt(L=3),
    Blbq(L=3, alpha=-0.7),
    Blbq(L=3, alpha=1.0 / 3.0),
    Xxz(L=3, J=1.3, D=-0.4),
    Xxz(L=3, J=-2.0, D=1.5),
    Blocked(L=3, N=1, J=2.0, D=-3.0),
    Blocked(L=3, N=0, J=1.0, D=0.0),
]


def spec_id(spec):
    return type(spec).__name__ + str(getattr(spec, "alpha", getattr(spec, "J", "")))


@pytest.mark.parametrize("spec", SMALL_SPECS, ids=spec_id)
def test_mpo_equals_dense_hamiltonian(spec):
    np.testing.assert_allclose(
        mpo_to_dense(build_mpo(spec)), dense_hamiltonian(spec), atol=1e-12
    )


@pytest.mark.parametrize("spec", SMALL_SPECS, ids=spec_id)
def test_hamiltonian_is_hermitian(spec):
    h = dense_hamiltonian(spec)
    np.testing.assert_allclose(h, h.conj().T, atol=1e-12)


@pytest.mark.parametrize("spec", SMALL_SPECS, ids=spec_id)
def test_mpo_tensors_are_real(spec):
    # Realness is what the solver's fast path rests on; every model must
    # factor its exchange terms accordingly.
    for w in build_mpo(spec).tensors:
        assert w.dtype == np.float64


@pytest.mark.parametrize("spec", SMALL_SPECS, ids=spec_id)
def test_expect_mpo_matches_dense_quadratic_form(spec):
    state = random_mps(chain_dims(spec), bond=5, seed=11)
    psi = to_dense(state)
    h = dense_hamiltonian(spec)
    want = np.vdot(psi, h @ psi)
    assert expect_mpo(state, build_mpo(spec)) == pytest.approx(want, abs=1e-11)


@pytest.mark.parametrize("spec", SMALL_SPECS[:4], ids=spec_id)
def test_apply_mpo_matches_dense_product(spec):
    state = random_mps(chain_dims(spec), bond=4, seed=3)
    out = apply_mpo(build_mpo(spec), state)
    want = dense_hamiltonian(spec) @ to_dense(state)
    np.testing.assert_allclose(to_dense(out), want, atol=1e-11)


class TestValenceBondGroundState:
    @pytest.mark.parametrize("L", [2, 3, 4])
    def test_energy_closed_form(self, L):
        # Each of the L-1 bulk bonds contributes -2/3 and each boundary
        # qubit coupling -1 on the exact state.
        h = dense_hamiltonian(Aklt(L=L))
        e0 = np.linalg.eigvalsh(h)[0]
        assert e0 == pytest.approx(-2.0 / 3.0 * (L - 1) - 2.0, abs=1e-12)

    @pytest.mark.parametrize("L", [2, 3, 4])
    def test_mps_is_the_ground_state(self, L):
        spec = Aklt(L=L)
        psi = to_dense(aklt_mps(L))
        h = dense_hamiltonian(spec)
        e0 = -2.0 / 3.0 * (L - 1) - 2.0
        np.testing.assert_allclose(h @ psi, e0 * psi, atol=1e-12)

    def test_expect_mpo_on_exact_state(self):
        spec = Aklt(L=4)
        got = expect_mpo(aklt_mps(4), build_mpo(spec))
        assert got == pytest.approx(-4.0, abs=1e-12)

    def test_blbq_at_one_third_has_same_ground_state(self):
        psi = to_dense(aklt_mps(3))
        h = dense_hamiltonian(Blbq(L=3, alpha=1.0 / 3.0))
        e = np.vdot(psi, h @ psi).real
        np.testing.assert_allclose(h @ psi, e * psi, atol=1e-12)


class TestSpecs:
    def test_chain_dims(self):
        assert chain_dims(Aklt(L=2)) == (2, 3, 3, 2)
        assert chain_dims(Blocked(L=3, N=1, J=1.0, D=0.0)) == (2,) + (3,) * 5 + (2,)

    def test_n_spin_sites(self):
        assert n_spin_sites(Xxz(L=7, J=1.0, D=0.0)) == 7
        assert n_spin_sites(Blocked(L=6, N=2, J=1.0, D=0.0)) == 10

    def test_blocked_validation(self):
        with pytest.raises(ValueError):
            Blocked(L=4, N=1, J=1.0, D=0.0)
        with pytest.raises(ValueError):
            Blocked(L=3, N=-1, J=1.0, D=0.0)

    def test_chain_length_validation(self):
        with pytest.raises(ValueError):
            Xxz(L=0, J=1.0, D=0.0)

    def test_blocked_layout_regions(self):
        layout = blocked_layout(Blocked(L=6, N=1, J=1.0, D=0.0))
        assert layout.n_spin == 8
        assert "".join(layout.regions()) == "AALBBRCC"

    def test_specs_are_frozen_and_hashable(self):
        spec = Xxz(L=3, J=1.0, D=0.0)
        with pytest.raises(AttributeError):
            spec.J = 2.0
        assert hash(spec) == hash(Xxz(L=3, J=1.0, D=0.0))


class TestLocalTerms:
    def test_terms_rebuild_the_dense_hamiltonian(self):
        spec = Xxz(L=2, J=0.7, D=0.3)
        dims = chain_dims(spec)
        total = np.zeros((np.prod(dims), np.prod(dims)), dtype=complex)
        for sites, ops, coeff in local_terms(spec):
            factors = [np.eye(d, dtype=complex) for d in dims]
            for site, op in zip(sites, ops):
                factors[site] = op
            term = factors[0]
            for f in factors[1:]:
                term = np.kron(term, f)
            total += coeff * term
        np.testing.assert_allclose(total, dense_hamiltonian(spec), atol=1e-12)

    def test_all_term_operators_are_real(self):
        for sites, ops, coeff in local_terms(Blbq(L=3, alpha=0.4)):
            for op in ops:
                assert np.all(op.imag == 0.0)
