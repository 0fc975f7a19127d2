"""
Classifiers that are handed the true precision matrices.

All rules except the ideal one use the convention Omega0 = I (apply a
WhiteningTransform first when that does not hold).
"""

import logging
import math
from typing import Optional

import numpy as np

from qdaphase.arw.sampling import LabeledDataset, MeanVector, PrecisionMatrix
from qdaphase.classify.model import (
    QdaScore,
    TrainedClassifier,
    Variant,
    predict,
    prior_offset,
    selection,
)
from qdaphase.config_manager import get_config
from qdaphase.errors import ParameterError

logger = logging.getLogger(__name__)


def _class_means(data: LabeledDataset):
    if data.n0 < 1 or data.n1 < 1:
        raise ParameterError(f"both classes need samples, got n0={data.n0}, n1={data.n1}")
    return data.class_mean(0), data.class_mean(1)


def ideal_qda(mu: MeanVector, omega0: PrecisionMatrix, omega1: PrecisionMatrix,
              q: Optional[float] = None) -> TrainedClassifier:
    """Bayes rule for N(-mu, omega0^-1) against N(mu, omega1^-1).

    Q(x) = x'(O0 - O1)x + 2 mu'(O0 + O1)x + mu'(O0 - O1)mu + ln|O1| - ln|O0|
    """
    O0, O1 = omega0.entries, omega1.entries
    A = O0 - O1
    d = (O0 + O1) @ mu.values
    C = float(mu.values @ A @ mu.values) + omega1.log_det - omega0.log_det
    p = mu.p
    return TrainedClassifier(
        variant=Variant.IDEAL, quad=A, d=d, d_sel=np.ones(p, dtype=np.int8), weights=d,
        t=0.0, C=C, prior_offset=prior_offset(q), omega0=O0, omega1=O1,
    )


def ideal_qda_score(x: np.ndarray, mu: MeanVector, omega0: PrecisionMatrix,
                    omega1: PrecisionMatrix) -> QdaScore:
    """Ideal QDA score of a single point."""
    _, score = predict(ideal_qda(mu, omega0, omega1), x)
    return score


def train_qdaw(data: LabeledDataset, omega1: PrecisionMatrix, c: Optional[float] = None,
               variant: Variant = Variant.QDAW, q: Optional[float] = None) -> TrainedClassifier:
    """QDA for weak, dense means: replace mu-hat by the constant vector p^((c-1)/2) 1.

    C = mu0'(O1 - I)mu0 + ln|O1| + Tr(O1 - I)/n0 with mu0 the class-0 sample mean.

    Raises:
        ParameterError: c outside (0, 1) or an empty class
    """
    c = get_config().qdaw_c if c is None else float(c)
    if not 0.0 < c < 1.0:
        raise ParameterError(f"c must lie in (0, 1), got {c}")
    if data.n0 < 1:
        raise ParameterError("QDAw needs at least one class-0 sample")
    p = data.p
    O1 = omega1.entries
    mu0 = data.class_mean(0)
    a = p ** ((c - 1.0) / 2.0)
    mu_const = np.full(p, a)
    d = mu_const + O1 @ mu_const
    shift = O1 - np.eye(p)
    C = float(mu0 @ shift @ mu0) + omega1.log_det + float(np.trace(shift)) / data.n0
    return TrainedClassifier(
        variant=variant, quad=np.eye(p) - O1, d=d, d_sel=np.ones(p, dtype=np.int8),
        weights=d, t=0.0, C=C, prior_offset=prior_offset(q), omega1=O1, mu0_hat=mu0,
    )


def adaptive_threshold(d: np.ndarray, p: float, n: float) -> float:
    """2 sqrt(ln p)/sqrt(n) when some |d_j| exceeds 2 ln p/sqrt(n), else 0."""
    d = np.asarray(d, dtype=float)
    if not np.all(np.isfinite(d)):
        raise ParameterError("d must be finite")
    log_p = math.log(p)
    if d.size and float(np.max(np.abs(d))) > 2.0 * log_p / math.sqrt(n):
        return 2.0 * math.sqrt(log_p) / math.sqrt(n)
    return 0.0


def train_qdafs(data: LabeledDataset, omega1: PrecisionMatrix, t: Optional[float] = None,
                variant: Variant = Variant.QDAFS, q: Optional[float] = None) -> TrainedClassifier:
    """QDA with feature selection by hard-thresholding d = O1 mu1 - mu0.

    t=None picks adaptive_threshold(d, p, n).
    C = (mu0*d_sel)'(I - O1)(mu0*d_sel) + ln|O1| + Tr(O1^(d) - I)/n0.
    """
    mu0, mu1 = _class_means(data)
    p = data.p
    O1 = omega1.entries
    d = O1 @ mu1 - mu0
    if t is None:
        t = adaptive_threshold(d, p, data.n)
    d_sel = selection(d, t)
    picked = d_sel.astype(bool)
    A = np.eye(p) - O1
    m = mu0 * d_sel
    trace_term = float(np.sum(np.diag(O1)[picked] - 1.0)) / data.n0
    C = float(m @ A @ m) + omega1.log_det + trace_term
    logger.debug(f"{variant.value}: t={t:.4g}, {int(picked.sum())} of {p} features selected")
    return TrainedClassifier(
        variant=variant, quad=A, d=d, d_sel=d_sel, weights=d * d_sel, t=float(t), C=C,
        prior_offset=prior_offset(q), omega1=O1, mu0_hat=mu0, mu1_hat=mu1,
    )


def train_plain_qda(data: LabeledDataset, omega1: PrecisionMatrix,
                    q: Optional[float] = None) -> TrainedClassifier:
    """QDAfs without selection (t = 0): every feature enters the linear term."""
    return train_qdafs(data, omega1, t=0.0, variant=Variant.PLAIN_QDA, q=q)
