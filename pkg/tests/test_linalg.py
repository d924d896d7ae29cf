import numpy as np
import pytest
import scipy.sparse as sp

from newtonlab.linalg import (IndefiniteSignal, SingularSignal, SparseSymmetric,
                              cholesky, solve_indefinite, solve_spd)


def _random_symmetric(rng, n, density=0.3):
    A = sp.random(n, n, density=density, random_state=np.random.RandomState(
        rng.integers(2**31)), format="csr")
    A = A + A.T + sp.eye(n) * 0.0
    return SparseSymmetric.from_full(A)


def _random_spd(rng, n):
    B = rng.standard_normal((n, n))
    return SparseSymmetric.from_full(sp.csr_matrix(B @ B.T + n * np.eye(n)))


def test_sparse_symmetric_roundtrip(rng):
    A = _random_symmetric(rng, 20)
    dense = A.dense()
    np.testing.assert_allclose(dense, dense.T)
    B = SparseSymmetric.from_full(dense)
    np.testing.assert_allclose(B.dense(), dense)
    assert A.norm() == pytest.approx(np.linalg.norm(dense))


def test_sparse_symmetric_algebra(rng):
    A = _random_symmetric(rng, 15)
    B = _random_symmetric(rng, 15)
    np.testing.assert_allclose((A + B).dense(), A.dense() + B.dense())
    np.testing.assert_allclose(A.scaled(2.5).dense(), 2.5 * A.dense())
    x = rng.standard_normal(15)
    np.testing.assert_allclose(A.matvec(x), A.dense() @ x)


def test_cholesky_identity():
    A = SparseSymmetric.from_full(sp.eye(5, format="csr"))
    factor = cholesky(A)
    assert not isinstance(factor, IndefiniteSignal)
    np.testing.assert_allclose(solve_spd(factor, np.ones(5)), np.ones(5))


def test_cholesky_indefinite_diag():
    A = SparseSymmetric.from_full(sp.diags([1.0, -1.0]).tocsr())
    assert isinstance(cholesky(A), IndefiniteSignal)


def test_cholesky_spd_solve_accuracy(rng):
    A = _random_spd(rng, 50)
    b = rng.standard_normal(50)
    x = solve_spd(cholesky(A), b)
    assert np.linalg.norm(A.dense() @ x - b) <= 1e-8 * np.linalg.norm(b)


def test_cholesky_matches_dense_eigen_oracle(rng):
    """Success iff the dense minimum eigenvalue is positive, away from a
    margin band around zero."""
    for n in (10, 40, 100):
        for _ in range(20):
            A = _random_symmetric(rng, n)
            dense = A.dense()
            wmin = np.linalg.eigvalsh(dense).min()
            scale = max(np.linalg.norm(dense), 1.0)
            if abs(wmin) < 1e-6 * scale:
                continue  # documented exclusion band
            outcome = cholesky(A)
            if wmin > 0:
                assert not isinstance(outcome, IndefiniteSignal)
            else:
                assert isinstance(outcome, IndefiniteSignal)


def test_solve_spd_dimension_mismatch(rng):
    factor = cholesky(_random_spd(rng, 8))
    with pytest.raises(ValueError):
        solve_spd(factor, np.ones(9))


def test_solve_indefinite_diag():
    A = SparseSymmetric.from_full(sp.diags([2.0, -3.0]).tocsr())
    np.testing.assert_allclose(solve_indefinite(A, np.array([2.0, 3.0])),
                               [1.0, -1.0])


def test_solve_indefinite_zero_matrix():
    A = SparseSymmetric.from_full(sp.csr_matrix((4, 4)))
    assert isinstance(solve_indefinite(A, np.ones(4)), SingularSignal)


def test_solve_indefinite_singular_rank_deficient():
    dense = np.ones((3, 3))
    A = SparseSymmetric.from_full(sp.csr_matrix(dense))
    assert isinstance(solve_indefinite(A, np.ones(3)), SingularSignal)


def test_solve_indefinite_matches_dense_oracle(rng):
    for _ in range(10):
        B = rng.standard_normal((50, 50))
        dense = 0.5 * (B + B.T)  # symmetric, generically indefinite
        A = SparseSymmetric.from_full(sp.csr_matrix(dense))
        b = rng.standard_normal(50)
        x = solve_indefinite(A, b)
        assert not isinstance(x, SingularSignal)
        np.testing.assert_allclose(x, np.linalg.solve(dense, b),
                                   atol=1e-8 * np.linalg.norm(b))


def test_solve_indefinite_dimension_mismatch(rng):
    A = _random_spd(rng, 6)
    with pytest.raises(ValueError):
        solve_indefinite(A, np.ones(7))
