"""
Fitted QDA-family classifiers and their scoring.

Every variant scores a point with the same decomposition
    Q(x) = x_q' A x_q + 2 w' x_l + C (+ prior offset)
where A is the quadratic matrix, w the thresholded linear weights, x_q the
(optionally standardized) point used by the quadratic term and x_l the
point used by the linear term. The predicted label is 1{Q > 0}.
"""

import math
from dataclasses import dataclass
from enum import Enum
from typing import Optional, Tuple, Union

import numpy as np
import scipy.sparse as sp

from qdaphase.config_manager import get_config
from qdaphase.errors import ParameterError
from qdaphase.linalg import quadratic_rows

Matrix = Union[np.ndarray, sp.csr_matrix]


class Variant(str, Enum):
    IDEAL = "IdealQDA"
    QDAW = "QDAw"
    QDAFS = "QDAfs"
    PLAIN_QDA = "PlainQDA"
    QDAW_PCS = "QDAwPCS"
    QDAFS_PCS = "QDAfsPCS"
    QDAFS_PCS_KNOWN0 = "QDAfsPCSKnown0"
    QDA_PCS_KNOWN_MU = "QDAPCSKnownMu"
    ALGORITHM2 = "Algorithm2"
    LDA = "LDA"


@dataclass(frozen=True, eq=False)
class FeatureScaling:
    """Per-feature standardization x_j = (X_j - center_j) / scale_j.

    Features with keep[j] False are mapped to 0.
    """

    center: np.ndarray
    scale: np.ndarray
    keep: np.ndarray

    def apply(self, X: np.ndarray) -> np.ndarray:
        safe = np.where(self.keep, self.scale, 1.0)
        return np.where(self.keep, (X - self.center) / safe, 0.0)


@dataclass(frozen=True)
class QdaScore:
    """Score components; scalars for one point, arrays for a batch."""

    quadratic: Union[float, np.ndarray]
    linear: Union[float, np.ndarray]
    constant: float
    total: Union[float, np.ndarray]


@dataclass(frozen=True, eq=False)
class TrainedClassifier:
    """A fitted classifier of any variant.

    Attributes:
        variant: Which rule produced the model
        quad: Matrix A of the quadratic term (None means A = 0)
        d: Raw linear coefficient vector before thresholding
        d_sel: Selection indicator d^(t) in {0, 1}
        weights: Linear weights actually used (d * d_sel, or clipped d)
        t: Threshold used (0 when no selection)
        C: Fitted or tuned constant
        prior_offset: 2 ln(q / (1 - q)) for an unbalanced prior, else 0
        omega0, omega1, omega_diff: Precision matrices behind the rule, if any
        mu0_hat, mu1_hat: Class sample means, if the rule used them
        scale: Standardization applied before the quadratic term
        linear_on_scaled: Whether the linear term also uses the standardized point
    """

    variant: Variant
    quad: Optional[Matrix]
    d: np.ndarray
    d_sel: np.ndarray
    weights: np.ndarray
    t: float
    C: float
    prior_offset: float = 0.0
    omega0: Optional[Matrix] = None
    omega1: Optional[Matrix] = None
    omega_diff: Optional[Matrix] = None
    mu0_hat: Optional[np.ndarray] = None
    mu1_hat: Optional[np.ndarray] = None
    scale: Optional[FeatureScaling] = None
    linear_on_scaled: bool = False

    def __post_init__(self):
        p = self.d.shape[0]
        if self.d_sel.shape != (p,) or self.weights.shape != (p,):
            raise ParameterError("d, d_sel and weights must have the same length")
        if not np.all((self.d_sel == 0) | (self.d_sel == 1)):
            raise ParameterError("d_sel entries must be 0 or 1")
        if self.quad is not None and self.quad.shape != (p, p):
            raise ParameterError(f"quadratic matrix has shape {self.quad.shape}, expected ({p}, {p})")
        if not math.isfinite(self.C):
            raise ParameterError(f"constant C must be finite, got {self.C}")

    @property
    def p(self) -> int:
        return self.d.shape[0]

    @property
    def selected(self) -> np.ndarray:
        return np.flatnonzero(self.d_sel)


def prior_offset(q: Optional[float] = None) -> float:
    """2 ln(q / (1 - q)); zero for the balanced prior."""
    q = get_config().prior_q if q is None else float(q)
    if not 0.0 < q < 1.0:
        raise ParameterError(f"prior q must lie in (0, 1), got {q}")
    if q == 0.5:
        return 0.0
    return 2.0 * math.log(q / (1.0 - q))


def score_batch(model: TrainedClassifier, X: np.ndarray) -> QdaScore:
    """Score every row of X."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.shape[1] != model.p:
        raise ParameterError(f"feature dimension {X.shape[1]} does not match model p={model.p}")
    xq = model.scale.apply(X) if model.scale is not None else X
    if model.quad is None:
        quadratic = np.zeros(X.shape[0])
    else:
        quadratic = quadratic_rows(xq, model.quad)
    xl = xq if model.linear_on_scaled else X
    linear = 2.0 * (xl @ model.weights)
    constant = float(model.C + model.prior_offset)
    return QdaScore(quadratic=quadratic, linear=linear, constant=constant,
                    total=quadratic + linear + constant)


def predict_batch(model: TrainedClassifier, X: np.ndarray) -> Tuple[np.ndarray, QdaScore]:
    """Labels 1{Q > 0} for every row of X, with their scores."""
    scores = score_batch(model, X)
    return (scores.total > 0.0).astype(np.int8), scores


def predict(model: TrainedClassifier, x: np.ndarray) -> Tuple[int, QdaScore]:
    """Label and score of a single feature vector; Q = 0 maps to class 0."""
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise ParameterError(f"expected a single feature vector, got shape {x.shape}")
    labels, scores = predict_batch(model, x[None, :])
    single = QdaScore(quadratic=float(scores.quadratic[0]), linear=float(scores.linear[0]),
                      constant=scores.constant, total=float(scores.total[0]))
    return int(labels[0]), single


def selection(d: np.ndarray, t: float) -> np.ndarray:
    """d^(t): indicator of |d_j| >= t."""
    return (np.abs(d) >= t).astype(np.int8)
