"""Sparse symmetric storage and direct factorizations.

The SPD path factors P A P^T = L U with SuperLU in symmetric mode and a
symmetric fill-reducing permutation, accepting diagonal pivots
unconditionally. For a symmetric matrix this is an (unpivoted) LDL^T
factorization with D = diag(U), so by Sylvester's law of inertia the
matrix is positive definite exactly when every pivot is positive. A
nonpositive (or failed) pivot is reported as IndefiniteSignal -- a normal
outcome that Newton-type solvers use as their definiteness oracle.

Indefinite solves use SuperLU with ordinary partial pivoting, which is
stable for symmetric indefinite systems at the cost of losing the
inertia information (not needed there).
"""

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu


class IndefiniteSignal:
    """Cholesky outcome for a matrix that is not positive definite."""

    def __repr__(self):
        return "IndefiniteSignal()"


class SingularSignal:
    """Outcome of an indefinite solve on a numerically singular matrix."""

    def __repr__(self):
        return "SingularSignal()"


@dataclass
class SparseSymmetric:
    """Symmetric matrix stored as its upper triangle in CSR form."""

    upper: sp.csr_matrix

    def __post_init__(self):
        if self.upper.shape[0] != self.upper.shape[1]:
            raise ValueError("matrix must be square")
        self._full = None

    @classmethod
    def from_full(cls, A):
        """Build from a full symmetric sparse or dense matrix."""
        A = sp.csr_matrix(A)
        return cls(upper=sp.triu(A, format="csr"))

    @property
    def dim(self):
        return self.upper.shape[0]

    def full(self):
        """Full symmetric CSR matrix (cached)."""
        if self._full is None:
            U = self.upper
            D = sp.diags(U.diagonal())
            self._full = (U + U.T - D).tocsr()
        return self._full

    def dense(self):
        return self.full().toarray()

    def matvec(self, x):
        return self.full() @ x

    def __add__(self, other):
        return SparseSymmetric(upper=(self.upper + other.upper).tocsr())

    def scaled(self, c):
        return SparseSymmetric(upper=(c * self.upper).tocsr())

    def norm(self):
        """Frobenius norm (off-diagonal entries counted twice)."""
        U = self.upper
        return float(np.sqrt(max(2.0 * np.sum(U.data**2) - np.sum(U.diagonal() ** 2), 0.0)))


@dataclass
class SpdFactor:
    """Opaque SPD factorization handle; apply as the inverse operator."""

    _lu: object
    dim: int

    def solve(self, b):
        b = np.asarray(b, dtype=float)
        if b.shape[0] != self.dim:
            raise ValueError(f"rhs has dimension {b.shape[0]}, expected {self.dim}")
        return self._lu.solve(b)


def cholesky(A):
    """SPD factorization of a SparseSymmetric.

    Returns an SpdFactor on success, IndefiniteSignal if any pivot of the
    symmetric factorization is nonpositive (the matrix is not positive
    definite).
    """
    full = A.full().tocsc()
    try:
        lu = splu(full, permc_spec="MMD_AT_PLUS_A", diag_pivot_thresh=0.0,
                  options={"SymmetricMode": True})
    except RuntimeError:
        return IndefiniteSignal()
    pivots = lu.U.diagonal()
    if np.any(pivots <= 0.0) or not np.all(np.isfinite(pivots)):
        return IndefiniteSignal()
    return SpdFactor(_lu=lu, dim=A.dim)


def solve_spd(factor, b):
    """Solve A x = b through a successful cholesky factor."""
    return factor.solve(b)


def solve_indefinite(A, b):
    """Direct solve with a symmetric (possibly indefinite) matrix.

    Returns the solution vector, or SingularSignal when the matrix is
    numerically singular (pivot below 1e-12 * ||A||).
    """
    b = np.asarray(b, dtype=float)
    if b.shape[0] != A.dim:
        raise ValueError(f"rhs has dimension {b.shape[0]}, expected {A.dim}")
    full = A.full().tocsc()
    scale = A.norm()
    if scale == 0.0:
        return SingularSignal()
    try:
        lu = splu(full)
    except RuntimeError:
        return SingularSignal()
    pivots = np.abs(lu.U.diagonal())
    if not np.all(np.isfinite(pivots)) or np.min(pivots) < 1e-12 * scale:
        return SingularSignal()
    return lu.solve(b)
