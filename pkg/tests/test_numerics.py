import numpy as np
import pytest

from aligned_consensus.numerics import (
    NumericalError,
    Subspace,
    as_matrix,
    kron,
    null_space,
    projection_matrix,
    pseudo_inverse,
    range_space,
    rank_with_tol,
    subspace_equal,
    svd,
)

RANK1 = np.array([[1.0, 1.0], [1.0, 1.0]])


def random_matrix(rng, max_dim=8):
    m = rng.integers(1, max_dim + 1)
    n = rng.integers(1, max_dim + 1)
    return rng.standard_normal((m, n))


class TestSvd:
    def test_identity(self):
        f = svd(np.eye(2))
        np.testing.assert_allclose(f.u, np.eye(2))
        np.testing.assert_allclose(f.s, [1.0, 1.0])
        np.testing.assert_allclose(f.vt, np.eye(2))

    def test_rank1_matrix(self):
        f = svd(RANK1)
        np.testing.assert_allclose(f.s, [2.0, 0.0], atol=1e-12)
        # right singular vector of the dominant value is (1,1)/sqrt(2)
        np.testing.assert_allclose(np.abs(f.vt[0]), [2**-0.5, 2**-0.5])

    def test_zero_matrix(self):
        f = svd(np.zeros((3, 3)))
        np.testing.assert_allclose(f.s, [0.0, 0.0, 0.0])

    def test_reconstruction_random(self):
        rng = np.random.default_rng(1)
        for _ in range(200):
            a = random_matrix(rng)
            f = svd(a)
            norm = np.linalg.norm(a)
            assert np.linalg.norm(f.reconstruct() - a) <= 1e-10 * max(norm, 1.0)
            np.testing.assert_allclose(f.u.T @ f.u, np.eye(f.u.shape[1]), atol=1e-10)
            np.testing.assert_allclose(f.vt @ f.vt.T, np.eye(f.vt.shape[0]), atol=1e-10)
            assert np.all(np.diff(f.s) <= 1e-12)

    def test_sign_convention_is_deterministic(self):
        rng = np.random.default_rng(5)
        a = rng.standard_normal((4, 4))
        f1, f2 = svd(a), svd(a.copy())
        np.testing.assert_array_equal(f1.u, f2.u)
        for k in range(4):
            nz = np.flatnonzero(np.abs(f1.u[:, k]) > 1e-12)
            assert f1.u[nz[0], k] >= 0

    def test_rejects_nonfinite(self):
        with pytest.raises(ValueError):
            svd([[np.nan, 0.0], [0.0, 1.0]])
        with pytest.raises(ValueError):
            as_matrix([[np.inf]])


class TestPseudoInverse:
    def test_identity(self):
        np.testing.assert_allclose(pseudo_inverse(np.eye(3)), np.eye(3), atol=1e-12)

    def test_rank1(self):
        np.testing.assert_allclose(pseudo_inverse(RANK1), 0.25 * RANK1, atol=1e-12)

    def test_singular_diagonal(self):
        np.testing.assert_allclose(
            pseudo_inverse(np.diag([2.0, 0.0])), np.diag([0.5, 0.0]), atol=1e-12
        )

    def test_moore_penrose_random(self):
        rng = np.random.default_rng(2)
        for _ in range(200):
            a = random_matrix(rng)
            p = pseudo_inverse(a)
            scale = max(np.linalg.norm(a), 1.0)
            assert np.linalg.norm(a @ p @ a - a) <= 1e-10 * scale
            assert np.linalg.norm(p @ a @ p - p) <= 1e-10 * max(np.linalg.norm(p), 1.0)

    def test_tol_must_be_positive(self):
        with pytest.raises(ValueError):
            pseudo_inverse(np.eye(2), tol=0.0)


class TestProjection:
    def test_rank1(self):
        np.testing.assert_allclose(projection_matrix(RANK1), 0.5 * RANK1, atol=1e-12)

    def test_full_rank_gives_identity(self):
        rng = np.random.default_rng(3)
        a = rng.standard_normal((4, 4)) + 4 * np.eye(4)
        np.testing.assert_allclose(projection_matrix(a), np.eye(4), atol=1e-10)

    def test_zero(self):
        np.testing.assert_allclose(projection_matrix(np.zeros((3, 3))), np.zeros((3, 3)))

    def test_idempotent_symmetric_random(self):
        rng = np.random.default_rng(4)
        for _ in range(200):
            a = random_matrix(rng)
            p = projection_matrix(a)
            assert np.linalg.norm(p @ p - p) <= 1e-10
            assert np.linalg.norm(p - p.T) <= 1e-10
            assert rank_with_tol(p) == rank_with_tol(a)
            # P fixes vectors already in the span
            x = a @ rng.standard_normal(a.shape[1])
            assert np.linalg.norm(p @ x - x) <= 1e-9 * (1 + np.linalg.norm(x))


class TestNullSpace:
    def test_example1_gain(self):
        sub = null_space(RANK1)
        assert sub.dim == 1
        expected = np.array([[2**-0.5], [-(2**-0.5)]])
        assert np.linalg.norm(np.abs(sub.basis) - np.abs(expected)) <= 1e-12

    def test_identity_has_trivial_null(self):
        assert null_space(np.eye(4)).dim == 0

    def test_zero_has_full_null(self):
        sub = null_space(np.zeros((3, 3)))
        assert sub.dim == 3
        np.testing.assert_allclose(sub.projector(), np.eye(3), atol=1e-12)

    def test_rank_nullity_and_orthogonality(self):
        rng = np.random.default_rng(6)
        for _ in range(200):
            a = random_matrix(rng)
            sub = null_space(a)
            assert rank_with_tol(a) + sub.dim == a.shape[1]
            if sub.dim:
                assert np.max(np.abs(a @ sub.basis)) <= 1e-10 * max(
                    np.linalg.norm(a), 1.0
                )
                # null space is orthogonal to the row space
                row = range_space(a.T)
                if row.dim:
                    assert np.max(np.abs(sub.basis.T @ row.basis)) <= 1e-10


class TestRank:
    def test_examples(self):
        assert rank_with_tol(RANK1) == 1
        assert rank_with_tol(np.eye(4)) == 4
        assert rank_with_tol(np.zeros((2, 3))) == 0


class TestKron:
    def test_block_diagonal(self):
        a = np.array([[1.0, 2.0], [3.0, 4.0]])
        out = kron(np.eye(2), a)
        np.testing.assert_allclose(out[:2, :2], a)
        np.testing.assert_allclose(out[2:, 2:], a)
        np.testing.assert_allclose(out[:2, 2:], 0)

    def test_scalar_identity(self):
        w = np.array([[1.0, 2.0], [3.0, 4.0]])
        np.testing.assert_allclose(kron(w, np.eye(1)), w)

    def test_power_identity(self):
        rng = np.random.default_rng(7)
        w = rng.standard_normal((3, 3))
        np.testing.assert_allclose(
            kron(w, np.eye(2)) @ kron(w, np.eye(2)), kron(w @ w, np.eye(2)), atol=1e-12
        )

    def test_commutation_identity_random(self):
        rng = np.random.default_rng(8)
        for _ in range(200):
            N, n = rng.integers(1, 5), rng.integers(1, 5)
            w = rng.standard_normal((N, N))
            a = rng.standard_normal((n, n))
            lhs = kron(w, np.eye(n)) @ kron(np.eye(N), a)
            rhs = kron(np.eye(N), a) @ kron(w, np.eye(n))
            assert np.linalg.norm(lhs - rhs) <= 1e-12 * max(np.linalg.norm(lhs), 1.0)
            np.testing.assert_allclose(lhs, kron(w, a), atol=1e-12)

    def test_size_guard(self):
        with pytest.raises(NumericalError):
            kron(np.ones((3000, 3000)), np.ones((2, 2)))


class TestSubspaceEqual:
    def test_scaling_invariance(self):
        s1 = range_space(np.array([[1.0], [-1.0]]))
        s2 = range_space(np.array([[-2.0], [2.0]]))
        assert subspace_equal(s1, s2)

    def test_distinct_axes(self):
        s1 = range_space(np.array([[1.0], [0.0]]))
        s2 = range_space(np.array([[0.0], [1.0]]))
        assert not subspace_equal(s1, s2)

    def test_self_equality(self):
        s = null_space(RANK1)
        assert subspace_equal(s, s)

    def test_dimension_mismatch_raises(self):
        s1 = Subspace(basis=np.eye(2), ambient_dim=2, dim=2, tol=1e-12)
        s2 = Subspace(basis=np.eye(3), ambient_dim=3, dim=3, tol=1e-12)
        with pytest.raises(ValueError):
            subspace_equal(s1, s2)
