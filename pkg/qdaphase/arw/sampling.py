"""
Sampling under the ARW model: the mean vector, class precision matrices and
labeled Gaussian mixtures, plus the spectral bound on the off-diagonal part.
"""

import logging
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Optional

import numpy as np
import scipy.sparse as sp
from scipy.linalg import solve_triangular
from scipy.sparse.linalg import ArpackNoConvergence, eigsh

from qdaphase.arw.params import ScaleSet
from qdaphase.config_manager import get_config
from qdaphase.errors import ParameterError, PositiveDefiniteError
from qdaphase.linalg import cholesky_lower

logger = logging.getLogger(__name__)


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a)
    a.flags.writeable = False
    return a


@dataclass(frozen=True, eq=False)
class MeanVector:
    """Mean vector mu; class 0 is centred at -mu, class 1 at +mu."""

    values: np.ndarray
    support: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "values", _readonly(np.asarray(self.values, dtype=float)))
        object.__setattr__(self, "support", _readonly(np.asarray(self.support, dtype=np.int64)))

    @classmethod
    def from_values(cls, values) -> "MeanVector":
        values = np.asarray(values, dtype=float)
        return cls(values=values, support=np.flatnonzero(values))

    @property
    def p(self) -> int:
        return self.values.shape[0]


@dataclass(frozen=True, eq=False)
class PrecisionMatrix:
    """Symmetric positive definite precision matrix.

    `offdiag_support` is a (K, 2) array of (i, j) pairs with i < j, sorted.
    The Cholesky factor of the entries is computed once and cached.
    """

    entries: np.ndarray
    offdiag_support: np.ndarray = field(default_factory=lambda: np.empty((0, 2), dtype=np.int64))

    def __post_init__(self):
        object.__setattr__(self, "entries", _readonly(np.asarray(self.entries, dtype=float)))
        object.__setattr__(self, "offdiag_support",
                           _readonly(np.asarray(self.offdiag_support, dtype=np.int64).reshape(-1, 2)))

    @classmethod
    def from_dense(cls, entries, check: bool = True) -> "PrecisionMatrix":
        """Wrap a dense symmetric matrix, reading the support from its nonzeros."""
        M = np.array(entries, dtype=float)
        if M.ndim != 2 or M.shape[0] != M.shape[1]:
            raise ParameterError(f"precision matrix must be square, got {M.shape}")
        if check and not np.array_equal(M, M.T):
            raise ParameterError("precision matrix must be symmetric")
        rows, cols = np.nonzero(np.triu(M, k=1))
        matrix = cls(entries=M, offdiag_support=np.column_stack([rows, cols]))
        if check:
            matrix.cholesky
        return matrix

    @classmethod
    def identity(cls, p: int) -> "PrecisionMatrix":
        return cls(entries=np.eye(p))

    @property
    def p(self) -> int:
        return self.entries.shape[0]

    @cached_property
    def cholesky(self) -> np.ndarray:
        """Lower factor L with entries = L L'."""
        return cholesky_lower(self.entries)

    @cached_property
    def log_det(self) -> float:
        return float(2.0 * np.sum(np.log(np.diag(self.cholesky))))

    def offdiag(self) -> sp.csr_matrix:
        """Off-diagonal part V as a sparse matrix."""
        V = sp.csr_matrix(self.entries)
        V.setdiag(0.0)
        V.eliminate_zeros()
        return V

    def is_identity(self) -> bool:
        return bool(np.array_equal(self.entries, np.eye(self.p)))


@dataclass(frozen=True, eq=False)
class LabeledDataset:
    """n x p features with binary labels."""

    X: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        X = np.asarray(self.X, dtype=float)
        y = np.asarray(self.y).astype(np.int8)
        if X.ndim != 2:
            raise ParameterError(f"X must be two-dimensional, got shape {X.shape}")
        if y.shape != (X.shape[0],):
            raise ParameterError(f"y has shape {y.shape}, expected ({X.shape[0]},)")
        if not np.all((y == 0) | (y == 1)):
            raise ParameterError("labels must be 0 or 1")
        object.__setattr__(self, "X", _readonly(X))
        object.__setattr__(self, "y", _readonly(y))

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def p(self) -> int:
        return self.X.shape[1]

    @property
    def n0(self) -> int:
        return int(np.sum(self.y == 0))

    @property
    def n1(self) -> int:
        return int(np.sum(self.y == 1))

    def class_samples(self, k: int) -> np.ndarray:
        return self.X[self.y == k]

    def class_mean(self, k: int) -> np.ndarray:
        return self.class_samples(k).mean(axis=0)

    def subset(self, rows) -> "LabeledDataset":
        rows = np.asarray(rows)
        return LabeledDataset(X=self.X[rows], y=self.y[rows])


def sample_mu(scales: ScaleSet, p: int, rng: np.random.Generator) -> MeanVector:
    """Each entry is tau with probability eps, else 0."""
    mask = rng.random(p) < scales.eps
    values = np.where(mask, scales.tau, 0.0)
    return MeanVector(values=values, support=np.flatnonzero(mask))


def _upper_pairs(linear: np.ndarray, p: int):
    """Map row-major strict-upper-triangle offsets to (i, j) index pairs."""
    k = linear.astype(np.int64)
    b = 2 * p - 1
    i = np.floor((b - np.sqrt(np.maximum(b * b - 8.0 * k, 0.0))) / 2.0).astype(np.int64)

    def row_offset(r):
        return r * (2 * p - r - 1) // 2

    # float rounding can put i off by one in either direction
    i = np.where(row_offset(i) > k, i - 1, i)
    i = np.where(row_offset(i + 1) <= k, i + 1, i)
    j = k - row_offset(i) + i + 1
    return i, j


def sample_precision(scales: ScaleSet, p: int, rng: np.random.Generator,
                     diagonal_law: Optional[str] = None,
                     max_attempts: Optional[int] = None) -> PrecisionMatrix:
    """Draw Omega = diag(1 + xi) + V with V_ij = +/-eta on a Bernoulli(nu) pattern.

    Draws that are not positive definite are rejected and redrawn.

    Args:
        scales: Model scales (uses eta, nu, xi)
        p: Dimension
        rng: Generator for this draw
        diagonal_law: 'plus' (1+xi) or 'symmetric' (1 +/- xi); defaults to settings
        max_attempts: Redraw budget; defaults to settings (20)

    Raises:
        PositiveDefiniteError: if every attempt produced a non-PD matrix
    """
    config = get_config()
    diagonal_law = diagonal_law or config.diagonal_law
    max_attempts = max_attempts or config.pd_max_attempts
    if diagonal_law not in ("plus", "symmetric"):
        raise ParameterError(f"unknown diagonal law {diagonal_law!r}")

    n_pairs = p * (p - 1) // 2
    last_error: Optional[PositiveDefiniteError] = None
    for attempt in range(1, max_attempts + 1):
        count = int(rng.binomial(n_pairs, scales.nu)) if n_pairs > 0 else 0
        linear = np.sort(rng.choice(n_pairs, size=count, replace=False)) if count else np.empty(0, np.int64)
        rows, cols = _upper_pairs(linear, p)
        signs = np.where(rng.random(count) < 0.5, -1.0, 1.0)

        if diagonal_law == "plus":
            diag = np.full(p, 1.0 + scales.xi)
        else:
            diag = 1.0 + scales.xi * np.where(rng.random(p) < 0.5, -1.0, 1.0)

        entries = np.diag(diag)
        entries[rows, cols] = signs * scales.eta
        entries[cols, rows] = signs * scales.eta
        matrix = PrecisionMatrix(entries=entries, offdiag_support=np.column_stack([rows, cols]))
        try:
            matrix.cholesky
            return matrix
        except PositiveDefiniteError as e:
            last_error = e
            logger.warning(f"Precision draw {attempt}/{max_attempts} not positive definite: {e}")

    raise PositiveDefiniteError(
        f"no positive definite draw after {max_attempts} attempts",
        pivot=last_error.pivot if last_error else None,
    )


def sample_gaussian(mean: np.ndarray, omega: PrecisionMatrix, size: int,
                    rng: np.random.Generator) -> np.ndarray:
    """`size` rows from N(mean, omega^-1) using the cached factor of omega.

    With omega = L L', x = mean + L'^-1 z has covariance omega^-1.
    """
    z = rng.standard_normal((omega.p, size))
    draws = solve_triangular(omega.cholesky, z, lower=True, trans='T')
    return np.asarray(mean, dtype=float)[None, :] + draws.T


def sample_dataset(mu: MeanVector, omega0: PrecisionMatrix, omega1: PrecisionMatrix,
                   n: int, q: float, rng: np.random.Generator,
                   max_attempts: Optional[int] = None) -> LabeledDataset:
    """Draw n labeled points from (1-Y) N(-mu, omega0^-1) + Y N(mu, omega1^-1).

    Labels are Bernoulli(q). For 0 < q < 1 the labels are redrawn until both
    classes are present; q in {0, 1} yields a single-class set.

    Raises:
        ParameterError: bad q, n or dimensions
        PositiveDefiniteError: non-PD precision input, or no two-class label draw
    """
    if not 0.0 <= q <= 1.0:
        raise ParameterError(f"q={q} outside [0, 1]")
    if n < 1:
        raise ParameterError(f"n={n} must be positive")
    if not (mu.p == omega0.p == omega1.p):
        raise ParameterError("mu, omega0 and omega1 dimensions differ")
    max_attempts = max_attempts or get_config().label_max_attempts

    for _ in range(max_attempts):
        y = (rng.random(n) < q).astype(np.int8)
        if 0.0 < q < 1.0 and (y.all() or not y.any()):
            continue
        break
    else:
        raise ParameterError(f"no label draw with both classes after {max_attempts} attempts")

    X = np.empty((n, mu.p))
    for k, (sign, omega) in enumerate(((-1.0, omega0), (1.0, omega1))):
        rows = np.flatnonzero(y == k)
        if rows.size:
            X[rows] = sample_gaussian(sign * mu.values, omega, rows.size, rng)
    return LabeledDataset(X=X, y=y)


def spectral_bound(scales: ScaleSet, p: int) -> float:
    """eta * b(p, beta), the high-probability bound on ||V||_2.

    b = 3 sqrt(p nu) for beta < 1, 2 sqrt(ln p / ln ln p) for beta = 1,
    2 / (beta - 1) for beta > 1; beta is recovered from nu = p^-beta.
    """
    if scales.nu == 0.0 or scales.eta == 0.0:
        return 0.0
    beta = -math.log(scales.nu) / math.log(p)
    if math.isclose(beta, 1.0, rel_tol=0.0, abs_tol=1e-9):
        b = 2.0 * math.sqrt(math.log(p) / math.log(math.log(p)))
    elif beta < 1.0:
        b = 3.0 * math.sqrt(p * scales.nu)
    else:
        b = 2.0 / (beta - 1.0)
    return scales.eta * b


def spectral_norm(M) -> float:
    """Largest absolute eigenvalue of a symmetric dense or sparse matrix."""
    S = sp.csr_matrix(M)
    if S.nnz == 0:
        return 0.0
    if S.shape[0] < 3:
        return float(np.max(np.abs(np.linalg.eigvalsh(S.toarray()))))
    try:
        values = eigsh(S, k=1, which='LM', return_eigenvectors=False)
        return float(np.abs(values[0]))
    except ArpackNoConvergence:
        logger.warning("ARPACK did not converge; using dense eigenvalues")
        return float(np.max(np.abs(np.linalg.eigvalsh(S.toarray()))))


@dataclass(frozen=True, eq=False)
class WhiteningTransform:
    """Change of variables x -> L'x that maps omega0 = L L' to the identity."""

    factor: np.ndarray

    def apply_data(self, X: np.ndarray) -> np.ndarray:
        return np.asarray(X, dtype=float) @ self.factor

    def apply_mean(self, mu: MeanVector) -> MeanVector:
        return MeanVector.from_values(self.factor.T @ mu.values)

    def apply_precision(self, omega: PrecisionMatrix) -> PrecisionMatrix:
        left = solve_triangular(self.factor, omega.entries, lower=True)
        M = solve_triangular(self.factor, left.T, lower=True)
        M = (M + M.T) / 2.0
        return PrecisionMatrix.from_dense(M)

    def apply_dataset(self, data: LabeledDataset) -> LabeledDataset:
        return LabeledDataset(X=self.apply_data(data.X), y=data.y)


def whitening_transform(omega0: PrecisionMatrix) -> WhiteningTransform:
    return WhiteningTransform(factor=omega0.cholesky)
