"""
Oracles for quadratic forms of Gaussian vectors, mis-classification rate
estimation and Hellinger-affinity diagnostics.

For X ~ N(mu, Sigma) and S = X'AX + 2d'X:
    E[S]   = Tr(A Sigma) + mu'A mu + 2 d'mu
    Var[S] = 2 Tr((A Sigma)^2) + 4 (mu'A Sigma A mu + 2 mu'A Sigma d + d'Sigma d)
"""

import logging
import math
from dataclasses import dataclass, field
from typing import NamedTuple, Optional, Tuple

import numpy as np
from scipy.linalg import cho_solve

from qdaphase.arw.params import ArwParams, derive_scales
from qdaphase.arw.sampling import (
    MeanVector,
    PrecisionMatrix,
    sample_gaussian,
    sample_mu,
    sample_precision,
)
from qdaphase.classify.model import TrainedClassifier, predict_batch
from qdaphase.errors import ParameterError
from qdaphase.linalg import cholesky_lower, is_symmetric
from qdaphase.rng import stream

logger = logging.getLogger(__name__)

# Monte Carlo draws per chunk
_CHUNK = 50_000


@dataclass(frozen=True, eq=False)
class QuadFormSpec:
    """S = X'AX + 2d'X with X ~ N(mu, Sigma)."""

    A: np.ndarray
    d: np.ndarray
    mu: np.ndarray
    Sigma: np.ndarray
    _factor: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        A = np.asarray(self.A, dtype=float)
        p = A.shape[0]
        if A.shape != (p, p):
            raise ParameterError(f"A must be square, got {A.shape}")
        scale = max(1.0, float(np.max(np.abs(A)))) if A.size else 1.0
        if not is_symmetric(A, atol=1e-12 * scale):
            raise ParameterError("A must be symmetric")
        for name in ("d", "mu"):
            v = np.asarray(getattr(self, name), dtype=float)
            if v.shape != (p,):
                raise ParameterError(f"{name} has shape {v.shape}, expected ({p},)")
            object.__setattr__(self, name, v)
        Sigma = np.asarray(self.Sigma, dtype=float)
        if Sigma.shape != (p, p):
            raise ParameterError(f"Sigma has shape {Sigma.shape}, expected ({p}, {p})")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "Sigma", Sigma)
        # raises PositiveDefiniteError for a non-PD covariance
        object.__setattr__(self, "_factor", cholesky_lower(Sigma))

    @property
    def p(self) -> int:
        return self.A.shape[0]


class QuadFormMoments(NamedTuple):
    mean: float
    variance: float


class QuadFormSample(NamedTuple):
    mean: float
    variance: float
    mean_se: float
    variance_se: float


def quad_form_moments(spec: QuadFormSpec) -> QuadFormMoments:
    """Closed-form mean and variance of S."""
    A, d, mu, Sigma = spec.A, spec.d, spec.mu, spec.Sigma
    AS = A @ Sigma
    mean = float(np.trace(AS) + mu @ A @ mu + 2.0 * d @ mu)
    Amu = A @ mu
    variance = float(2.0 * np.sum(AS * AS.T)
                     + 4.0 * (Amu @ Sigma @ Amu + 2.0 * Amu @ Sigma @ d + d @ Sigma @ d))
    return QuadFormMoments(mean, variance)


def mc_quad_form(spec: QuadFormSpec, reps: int, rng: np.random.Generator) -> QuadFormSample:
    """Unbiased sample mean and variance of S over `reps` draws, with standard errors."""
    if reps < 100:
        raise ParameterError(f"reps must be at least 100, got {reps}")
    L = spec._factor
    values = np.empty(reps)
    for start in range(0, reps, _CHUNK):
        size = min(_CHUNK, reps - start)
        X = spec.mu[None, :] + rng.standard_normal((size, spec.p)) @ L.T
        values[start:start + size] = (np.einsum("ij,jk,ik->i", X, spec.A, X)
                                      + 2.0 * (X @ spec.d))
    mean = float(values.mean())
    variance = float(values.var(ddof=1))
    centered = values - mean
    m4 = float(np.mean(centered ** 4))
    variance_se = math.sqrt(max(m4 - variance ** 2, 0.0) / reps)
    return QuadFormSample(mean, variance, math.sqrt(variance / reps), variance_se)


@dataclass(frozen=True)
class MrEstimate:
    """Mis-classification rate with its binomial standard error.

    per_class holds (class 0 predicted 1, class 1 predicted 0) rates.
    """

    mr: float
    se: float
    n_test: int
    per_class: Tuple[float, float]


def estimate_mr(model: TrainedClassifier, mu: MeanVector, omega0: PrecisionMatrix,
                omega1: PrecisionMatrix, n_test: int, rng: np.random.Generator,
                q: float = 0.5) -> MrEstimate:
    """Monte Carlo mis-classification rate on fresh test points.

    Draws n_test/2 points per class (class 0 gets the extra point when n_test
    is odd) and returns (1-q) p01 + q p10, the balanced average at q = 0.5.
    """
    if n_test < 2:
        raise ParameterError(f"n_test must be at least 2, got {n_test}")
    if not 0.0 <= q <= 1.0:
        raise ParameterError(f"q={q} outside [0, 1]")
    n1 = n_test // 2
    n0 = n_test - n1
    X0 = sample_gaussian(-mu.values, omega0, n0, rng)
    X1 = sample_gaussian(mu.values, omega1, n1, rng)
    labels0, _ = predict_batch(model, X0)
    labels1, _ = predict_batch(model, X1)
    p01 = float(np.mean(labels0 == 1))
    p10 = float(np.mean(labels1 == 0))
    mr = (1.0 - q) * p01 + q * p10
    se = math.sqrt(mr * (1.0 - mr) / n_test)
    return MrEstimate(mr=mr, se=se, n_test=n_test, per_class=(p01, p10))


def hellinger_exact(mu0: MeanVector, mu1: MeanVector, omega0: PrecisionMatrix,
                    omega1: PrecisionMatrix) -> float:
    """Exact Hellinger affinity between N(mu0, omega0^-1) and N(mu1, omega1^-1).

    In precision form
        H = |O0|^1/4 |O1|^1/4 / |(O0 + O1)/2|^1/2 * exp(-1/4 D'O1 (O0 + O1)^-1 O0 D)
    with D = mu1 - mu0.

    Raises:
        PositiveDefiniteError: a precision matrix is not positive definite
    """
    if not (mu0.p == mu1.p == omega0.p == omega1.p):
        raise ParameterError("dimension mismatch between means and precision matrices")
    total = omega0.entries + omega1.entries
    factor = cholesky_lower(total)
    log_det_mid = float(2.0 * np.sum(np.log(np.diag(factor)))) - omega0.p * math.log(2.0)
    delta = mu1.values - mu0.values
    shift = float((omega1.entries @ delta) @ cho_solve((factor, True), omega0.entries @ delta))
    log_h = 0.25 * (omega0.log_det + omega1.log_det) - 0.5 * log_det_mid - 0.25 * shift
    return float(min(math.exp(log_h), 1.0))


def hellinger_approx(mu: MeanVector, omega0: PrecisionMatrix, omega1: PrecisionMatrix) -> float:
    """Small-signal approximation exp{-1/2 [||mu||^2 + ||O0 - O1||_F^2 / 8]} for classes at -mu and +mu."""
    frob = float(np.sum((omega0.entries - omega1.entries) ** 2))
    return math.exp(-0.5 * (float(mu.values @ mu.values) + frob / 8.0))


def impossibility_indicator(params: ArwParams, draws: int, seed: int = 0,
                            omega0: Optional[PrecisionMatrix] = None) -> float:
    """Mean exact Hellinger affinity over `draws` model realizations.

    Each draw samples mu and Omega1 (Omega0 = I unless given) from its own
    stream ("hellinger", draw). Values near 1 mean no classifier can beat
    random guessing.
    """
    if draws < 1:
        raise ParameterError(f"draws must be positive, got {draws}")
    scales = derive_scales(params)
    omega0 = omega0 or PrecisionMatrix.identity(params.p)
    affinities = np.empty(draws)
    for k in range(draws):
        rng = stream(seed, "hellinger", k)
        mu = sample_mu(scales, params.p, rng)
        omega1 = sample_precision(scales, params.p, rng)
        affinities[k] = hellinger_exact(MeanVector.from_values(-mu.values), mu, omega0, omega1)
    mean = float(affinities.mean())
    logger.info(f"Mean Hellinger affinity {mean:.4f} over {draws} draws at p={params.p}")
    return mean
