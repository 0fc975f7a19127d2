"""
QDA-family classifiers.

Usage:
    from qdaphase.classify import train_qdafs, predict_batch, save_model

    model = train_qdafs(train, omega1)
    labels, scores = predict_batch(model, test.X)
    save_model(model, "qdafs.npz")
"""

from .model import (
    Variant,
    FeatureScaling,
    QdaScore,
    TrainedClassifier,
    prior_offset,
    score_batch,
    predict,
    predict_batch,
    selection,
)
from .known import (
    ideal_qda,
    ideal_qda_score,
    train_qdaw,
    train_qdafs,
    train_plain_qda,
    adaptive_threshold,
)
from .estimated import (
    QdaPcsMode,
    Algorithm2Base,
    train_qda_pcs,
    train_qda_pcs_known_mu,
    train_algorithm2,
    train_lda,
    clip_weights,
)
from .serialization import (
    FORMAT_VERSION,
    save_model,
    load_model,
)

__all__ = [
    # Model
    'Variant',
    'FeatureScaling',
    'QdaScore',
    'TrainedClassifier',
    'prior_offset',
    'score_batch',
    'predict',
    'predict_batch',
    'selection',
    # Known precision
    'ideal_qda',
    'ideal_qda_score',
    'train_qdaw',
    'train_qdafs',
    'train_plain_qda',
    'adaptive_threshold',
    # Estimated precision
    'QdaPcsMode',
    'Algorithm2Base',
    'train_qda_pcs',
    'train_qda_pcs_known_mu',
    'train_algorithm2',
    'train_lda',
    'clip_weights',
    # Model files
    'FORMAT_VERSION',
    'save_model',
    'load_model',
]
