"""
Classifiers built on PCS precision estimates: the single-estimate rules
(Omega0 = I known), the all-unknown rule, the real-data rule with
per-feature standardization (the real-data rule) and its LDA counterpart.
"""

import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.sparse as sp

from qdaphase.arw.sampling import LabeledDataset, MeanVector
from qdaphase.classify.known import adaptive_threshold, train_qdafs, train_qdaw
from qdaphase.classify.model import (
    FeatureScaling,
    TrainedClassifier,
    Variant,
    prior_offset,
    selection,
)
from qdaphase.config_manager import get_config
from qdaphase.errors import ParameterError
from qdaphase.precision import (
    PcsConfig,
    PrecisionEstimate,
    adjust_single,
    diff_threshold,
    log_det,
    pcs_estimate,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class QdaPcsMode:
    """weak(c) runs the QDAw rule, strong(t) the feature-selection rule."""

    kind: str
    value: Optional[float] = None

    def __post_init__(self):
        if self.kind not in ("weak", "strong"):
            raise ParameterError(f"mode must be 'weak' or 'strong', got {self.kind!r}")

    @classmethod
    def weak(cls, c: Optional[float] = None) -> "QdaPcsMode":
        return cls("weak", c)

    @classmethod
    def strong(cls, t: Optional[float] = None) -> "QdaPcsMode":
        return cls("strong", t)


def _require_classes(data: LabeledDataset):
    if data.n0 < 1 or data.n1 < 1:
        raise ParameterError(f"both classes need samples, got n0={data.n0}, n1={data.n1}")


def _unit_diagonal(M) -> np.ndarray:
    """M - diag(M) + I as a dense matrix."""
    dense = M.toarray() if sp.issparse(M) else np.array(M, dtype=float)
    np.fill_diagonal(dense, 1.0)
    return dense


def train_qda_pcs(data: LabeledDataset, mode: QdaPcsMode, config: Optional[PcsConfig] = None,
                  omega0_known: bool = False, q: Optional[float] = None,
                  threads: Optional[int] = None) -> TrainedClassifier:
    """QDA with PCS-estimated precision.

    weak(c): Omega0 = I, Omega1 from PCS on class 1 snapped by adjust_single, QDAw rule.
    strong(t), omega0_known: same estimate, QDAfs rule.
    strong(t): both matrices from PCS, thresholded difference, C from the
    unit-diagonal surrogates ln|O0 - diag(O0) + I| - ln|O1 - diag(O1) + I|.

    Raises:
        EstimationError: from PCS
        PositiveDefiniteError: a log-determinant input is not positive definite
    """
    _require_classes(data)
    config = config or PcsConfig.from_settings()
    p, n = data.p, data.n

    if mode.kind == "weak" or omega0_known:
        est1 = pcs_estimate(data.class_samples(1), config, threads=threads)
        omega1 = adjust_single(est1, p, n)
        if mode.kind == "weak":
            return train_qdaw(data, omega1, mode.value, variant=Variant.QDAW_PCS, q=q)
        return train_qdafs(data, omega1, mode.value, variant=Variant.QDAFS_PCS_KNOWN0, q=q)

    est0 = pcs_estimate(data.class_samples(0), config, threads=threads)
    est1 = pcs_estimate(data.class_samples(1), config, threads=threads)
    mu0, mu1 = data.class_mean(0), data.class_mean(1)
    omega_diff = diff_threshold(est0, est1, p, n)
    d = est1.entries @ mu1 - est0.entries @ mu0
    t = adaptive_threshold(d, p, n) if mode.value is None else float(mode.value)
    d_sel = selection(d, t)
    m = mu0 * d_sel
    C = (float(m @ (omega_diff @ m))
         + log_det(_unit_diagonal(est0.entries))
         - log_det(_unit_diagonal(est1.entries)))
    logger.debug(f"QDAfs-PCS: t={t:.4g}, {int(d_sel.sum())} features, "
                 f"{omega_diff.nnz} nonzeros in the difference")
    return TrainedClassifier(
        variant=Variant.QDAFS_PCS, quad=omega_diff, d=d, d_sel=d_sel, weights=d * d_sel,
        t=t, C=C, prior_offset=prior_offset(q), omega0=est0.entries, omega1=est1.entries,
        omega_diff=omega_diff, mu0_hat=mu0, mu1_hat=mu1,
    )


def train_qda_pcs_known_mu(data: LabeledDataset, mu: MeanVector,
                           config: Optional[PcsConfig] = None, q: Optional[float] = None,
                           threads: Optional[int] = None) -> TrainedClassifier:
    """Ideal rule with Omega0 = I, the true mu and a snapped PCS estimate of Omega1."""
    _require_classes(data)
    config = config or PcsConfig.from_settings()
    p = data.p
    est1 = pcs_estimate(data.class_samples(1), config, threads=threads)
    omega1 = adjust_single(est1, p, data.n)
    O1 = omega1.entries
    A = np.eye(p) - O1
    d = mu.values + O1 @ mu.values
    C = float(mu.values @ A @ mu.values) + omega1.log_det
    return TrainedClassifier(
        variant=Variant.QDA_PCS_KNOWN_MU, quad=A, d=d, d_sel=np.ones(p, dtype=np.int8),
        weights=d, t=0.0, C=C, prior_offset=prior_offset(q), omega1=O1,
    )


def clip_weights(d: np.ndarray, t: float) -> np.ndarray:
    """sign(d) * min(|d|, t); t = 0 means no cap."""
    if t == 0.0:
        return np.array(d, dtype=float)
    return np.sign(d) * np.minimum(np.abs(d), t)


@dataclass(frozen=True, eq=False)
class Algorithm2Base:
    """The (t, C)-independent part of a real-data rule or LDA fit.

    Attributes:
        omega0, omega1: PCS estimates (sparse)
        omega_diff: Off-diagonal part of omega0 - omega1, dropped features removed
        d: Omega1 mu1 / s1 - Omega0 mu0 / s0, zero on dropped features
        scaling: Standardization by the pooled per-feature spread
    """

    omega0: sp.csr_matrix
    omega1: sp.csr_matrix
    omega_diff: sp.csr_matrix
    d: np.ndarray
    mu0_hat: np.ndarray
    mu1_hat: np.ndarray
    scaling: FeatureScaling

    @property
    def p(self) -> int:
        return self.d.shape[0]

    @classmethod
    def fit(cls, data: LabeledDataset, config: Optional[PcsConfig] = None,
            threads: Optional[int] = None) -> "Algorithm2Base":
        _require_classes(data)
        config = config or PcsConfig.from_settings()
        est0 = pcs_estimate(data.class_samples(0), config, threads=threads)
        est1 = pcs_estimate(data.class_samples(1), config, threads=threads)
        return cls.from_estimates(data, est0, est1)

    @classmethod
    def from_estimates(cls, data: LabeledDataset, est0: PrecisionEstimate,
                       est1: PrecisionEstimate) -> "Algorithm2Base":
        _require_classes(data)
        X0, X1 = data.class_samples(0), data.class_samples(1)
        n0, n1 = X0.shape[0], X1.shape[0]
        mu0, mu1 = X0.mean(axis=0), X1.mean(axis=0)
        s0 = X0.std(axis=0, ddof=1) if n0 > 1 else np.zeros(data.p)
        s1 = X1.std(axis=0, ddof=1) if n1 > 1 else np.zeros(data.p)
        if n0 + n1 <= 2:
            raise ParameterError("pooled scale needs at least three samples")
        pooled = np.sqrt(((n0 - 1) * s0 ** 2 + (n1 - 1) * s1 ** 2) / (n0 + n1 - 2))
        keep = pooled > 0.0
        if not np.all(keep):
            logger.warning(f"Dropping {int((~keep).sum())} feature(s) with zero pooled variance")

        # a class with no spread on a feature borrows the pooled scale
        safe0 = np.where(s0 > 0.0, s0, np.where(keep, pooled, 1.0))
        safe1 = np.where(s1 > 0.0, s1, np.where(keep, pooled, 1.0))
        d = (est1.entries @ mu1) / safe1 - (est0.entries @ mu0) / safe0
        d = np.where(keep, d, 0.0)

        diff = (est0.entries - est1.entries).tocsr()
        diff.setdiag(0.0)
        mask = sp.diags(keep.astype(float))
        diff = (mask @ diff @ mask).tocsr()
        diff.eliminate_zeros()

        scaling = FeatureScaling(center=(mu0 + mu1) / 2.0, scale=np.where(keep, pooled, 1.0), keep=keep)
        return cls(omega0=est0.entries, omega1=est1.entries, omega_diff=diff, d=d,
                   mu0_hat=mu0, mu1_hat=mu1, scaling=scaling)

    def classifier(self, t: float, C: float, lda: bool = False,
                   lda_mode: Optional[str] = None, scaled_linear: Optional[bool] = None,
                   q: Optional[float] = None) -> TrainedClassifier:
        """Fix the threshold and constant to obtain a usable model."""
        if t < 0:
            raise ParameterError(f"threshold must be non-negative, got {t}")
        config = get_config()
        scaled_linear = config.algorithm2_scaled_linear if scaled_linear is None else scaled_linear
        if lda:
            lda_mode = lda_mode or config.lda_threshold_mode
            if lda_mode == "clip":
                d_sel = np.ones(self.p, dtype=np.int8)
                weights = clip_weights(self.d, t)
            else:
                d_sel = selection(self.d, t)
                weights = self.d * d_sel
            quad = None
            variant = Variant.LDA
        else:
            d_sel = selection(self.d, t)
            weights = self.d * d_sel
            quad = self.omega_diff
            variant = Variant.ALGORITHM2
        return TrainedClassifier(
            variant=variant, quad=quad, d=self.d, d_sel=d_sel, weights=weights, t=float(t),
            C=float(C), prior_offset=prior_offset(q), omega0=self.omega0, omega1=self.omega1,
            omega_diff=None if lda else self.omega_diff, mu0_hat=self.mu0_hat,
            mu1_hat=self.mu1_hat, scale=self.scaling, linear_on_scaled=bool(scaled_linear),
        )


def train_algorithm2(data: LabeledDataset, t: float, C: float,
                     config: Optional[PcsConfig] = None,
                     threads: Optional[int] = None) -> TrainedClassifier:
    """QDA with feature selection for real data (standardized quadratic term).

    Q = x'O_diff x + 2 (d * d_sel)'X + C with x the pooled-standardized point;
    the linear term uses the raw X unless algorithm2_scaled_linear is set.
    """
    return Algorithm2Base.fit(data, config, threads).classifier(t, C)


def train_lda(data: LabeledDataset, t: float, C: float, config: Optional[PcsConfig] = None,
              threads: Optional[int] = None) -> TrainedClassifier:
    """The real-data rule with the quadratic term removed and d clipped at t (or hard-thresholded)."""
    return Algorithm2Base.fit(data, config, threads).classifier(t, C, lda=True)
