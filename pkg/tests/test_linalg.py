"""Tests for the contraction, truncated SVD, and Lanczos primitives."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from haldane_mbqc.linalg import SvdResult, contract, lanczos_ground, svd_truncate


def random_matrix(rows: int, cols: int, seed: int, complex_: bool) -> np.ndarray:
    rng = np.random.default_rng(seed)
    m = rng.standard_normal((rows, cols))
    if complex_:
        m = m + 1j * rng.standard_normal((rows, cols))
    return m


def random_hermitian(dim: int, seed: int) -> np.ndarray:
    m = random_matrix(dim, dim, seed, complex_=True)
    return 0.5 * (m + m.conj().T)


class TestContract:
    def test_matches_tensordot(self):
        rng = np.random.default_rng(0)
        a = rng.standard_normal((3, 4, 5))
        b = rng.standard_normal((5, 4, 2))
        got = contract(a, [1, 2], b, [1, 0])
        np.testing.assert_allclose(got, np.tensordot(a, b, axes=([1, 2], [1, 0])))

    def test_output_axis_order_is_a_then_b(self):
        a = np.zeros((2, 7, 3))
        b = np.zeros((7, 5))
        assert contract(a, [1], b, [0]).shape == (2, 3, 5)


class TestSvdTruncate:
    @given(
        rows=st.integers(1, 12),
        cols=st.integers(1, 12),
        seed=st.integers(0, 10_000),
        complex_=st.booleans(),
    )
    @settings(max_examples=40)
    def test_exact_reconstruction_without_truncation(self, rows, cols, seed, complex_):
        m = random_matrix(rows, cols, seed, complex_)
        res = svd_truncate(m)
        rebuilt = res.left_isometry * res.singular_values @ res.right_isometry
        np.testing.assert_allclose(rebuilt, m, atol=1e-12)
        assert res.discarded_weight == 0.0

    @given(
        rows=st.integers(2, 12),
        cols=st.integers(2, 12),
        seed=st.integers(0, 10_000),
        max_rank=st.integers(1, 6),
    )
    @settings(max_examples=40)
    def test_truncation_invariants(self, rows, cols, seed, max_rank):
        m = random_matrix(rows, cols, seed, complex_=True)
        res = svd_truncate(m, max_rank=max_rank)
        k = res.singular_values.size
        assert 1 <= k <= max_rank
        # Kept singular values are sorted, descending.
        assert np.all(np.diff(res.singular_values) <= 0)
        # Both factors are isometries.
        u, vh = res.left_isometry, res.right_isometry
        np.testing.assert_allclose(u.conj().T @ u, np.eye(k), atol=1e-12)
        np.testing.assert_allclose(vh @ vh.conj().T, np.eye(k), atol=1e-12)
        # Discarded weight is the relative Frobenius error of the rebuild.
        rebuilt = u * res.singular_values @ vh
        err = np.linalg.norm(m - rebuilt) ** 2 / np.linalg.norm(m) ** 2
        assert res.discarded_weight == pytest.approx(err, abs=1e-12)

    def test_cutoff_drops_small_values(self):
        s = np.array([1.0, 0.5, 1e-9])
        m = np.diag(s)
        res = svd_truncate(m, cutoff=1e-12)
        assert res.singular_values.size == 2
        assert res.discarded_weight == pytest.approx(1e-18 / np.sum(s**2))

    def test_degenerate_multiplet_is_not_split(self):
        # Two exactly equal singular values straddling the weight cut: the
        # cutoff alone must keep either both or neither.
        m = np.diag([1.0, 1e-4, 1e-4])
        res = svd_truncate(m, cutoff=1.5e-8)
        assert res.singular_values.size in (1, 3)

    def test_rank_cap_wins_over_tie_extension(self):
        m = np.diag([1.0, 1.0, 1.0])
        res = svd_truncate(m, max_rank=2)
        assert res.singular_values.size == 2

    def test_zero_matrix_keeps_one_value(self):
        res = svd_truncate(np.zeros((3, 4)))
        assert res.singular_values.size == 1
        assert res.discarded_weight == 0.0

    def test_rejects_non_matrix(self):
        with pytest.raises(ValueError, match="matrix"):
            svd_truncate(np.zeros((2, 2, 2)))

    def test_result_type(self):
        assert isinstance(svd_truncate(np.eye(2)), SvdResult)


class TestLanczosGround:
    @given(seed=st.integers(0, 500))
    @settings(max_examples=15)
    def test_matches_dense_eigensolver_above_dense_cutoff(self, seed):
        dim = 90
        h = random_hermitian(dim, seed)
        want = np.linalg.eigvalsh(h)[0]
        got, vec = lanczos_ground(lambda v: h @ v, dim, tol=1e-11, max_iter=2000, seed=seed)
        assert got == pytest.approx(want, abs=1e-8)
        assert np.linalg.norm(vec) == pytest.approx(1.0, abs=1e-12)
        # The vector is an eigenvector, not just a low-energy direction.
        np.testing.assert_allclose(h @ vec, got * vec, atol=1e-7)

    def test_small_problems_are_solved_densely(self):
        h = random_hermitian(10, 3)
        e, vec = lanczos_ground(lambda v: h @ v, 10)
        assert e == pytest.approx(np.linalg.eigvalsh(h)[0], abs=1e-12)
        np.testing.assert_allclose(h @ vec, e * vec, atol=1e-10)

    def test_warm_start_from_eigenvector(self):
        h = random_hermitian(120, 9)
        evals, evecs = np.linalg.eigh(h)
        e, _ = lanczos_ground(
            lambda v: h @ v, 120, tol=1e-11, max_iter=400, v0=evecs[:, 0]
        )
        assert e == pytest.approx(evals[0], abs=1e-9)

    def test_degenerate_ground_space(self):
        # Twofold-degenerate minimum; any unit vector in the space is fine.
        diag = np.concatenate([[-2.0, -2.0], np.linspace(-1.0, 1.0, 98)])
        h = np.diag(diag)
        e, vec = lanczos_ground(lambda v: h @ v, 100, tol=1e-10, max_iter=2000, seed=4)
        assert e == pytest.approx(-2.0, abs=1e-8)
        assert np.sum(np.abs(vec[:2]) ** 2) == pytest.approx(1.0, abs=1e-6)

    def test_non_convergence_warns_by_default(self):
        h = random_hermitian(200, 11)
        with pytest.warns(UserWarning, match="no convergence"):
            lanczos_ground(lambda v: h @ v, 200, tol=1e-14, max_iter=3)

    def test_warn_flag_silences_non_convergence(self):
        import warnings

        h = random_hermitian(200, 11)
        with warnings.catch_warnings():
            warnings.simplefilter("error")
            lanczos_ground(lambda v: h @ v, 200, tol=1e-14, max_iter=3, warn=False)

    def test_rejects_bad_dimension(self):
        with pytest.raises(ValueError, match="positive"):
            lanczos_ground(lambda v: v, 0)
