"""Small dense and sparse linear-algebra helpers shared across modules."""

import numpy as np
import scipy.sparse as sp
from scipy.linalg import lapack

from qdaphase.errors import PositiveDefiniteError


def cholesky_lower(M: np.ndarray) -> np.ndarray:
    """Lower Cholesky factor L with M = L L'.

    Raises:
        PositiveDefiniteError: with the 0-based index of the failing pivot
    """
    A = np.asarray(M, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {A.shape}")
    if A.shape[0] == 0:
        return A.copy()
    if not np.all(np.isfinite(A)):
        raise PositiveDefiniteError("matrix has non-finite entries")
    factor, info = lapack.dpotrf(A, lower=1, clean=1, overwrite_a=0)
    if info > 0:
        raise PositiveDefiniteError("matrix is not positive definite", pivot=int(info) - 1)
    if info < 0:
        raise ValueError(f"illegal argument {-info} passed to dpotrf")
    return factor


def as_dense(M) -> np.ndarray:
    """Dense float copy of a dense or sparse matrix."""
    if sp.issparse(M):
        return M.toarray()
    return np.array(M, dtype=float)


def quadratic_rows(X: np.ndarray, A) -> np.ndarray:
    """Row-wise x'Ax for every row x of X; A may be dense or sparse."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    AX = np.asarray(A @ X.T)
    return np.einsum("ij,ji->i", X, AX)


def is_symmetric(M, atol: float = 0.0) -> bool:
    """Exact (atol=0) or tolerant symmetry check for dense or sparse input."""
    if sp.issparse(M):
        diff = (M - M.T).tocoo()
        if diff.nnz == 0:
            return True
        return bool(np.max(np.abs(diff.data)) <= atol)
    M = np.asarray(M)
    if atol == 0.0:
        return bool(np.array_equal(M, M.T))
    return bool(np.allclose(M, M.T, rtol=0.0, atol=atol))
