"""
ARW model - exponent parameterization, synthetic data and region labels.

Usage:
    from qdaphase.arw import ArwParams, derive_scales, sample_mu, sample_precision

    params = ArwParams(p=500, delta=0.8, zeta=0.3, theta=0.25,
                       alpha=0.2, beta=1.2, gamma=0.6)
    scales = derive_scales(params)
    mu = sample_mu(scales, params.p, rng)
    omega1 = sample_precision(scales, params.p, rng)
    label = region_classify(params)
"""

from .params import (
    ArwParams,
    ScaleSet,
    PARAM_KEYS,
    EXPONENT_NAMES,
    derive_scales,
    delta_for_sample_size,
    load_params_file,
)
from .sampling import (
    MeanVector,
    PrecisionMatrix,
    LabeledDataset,
    WhiteningTransform,
    sample_mu,
    sample_precision,
    sample_gaussian,
    sample_dataset,
    spectral_bound,
    spectral_norm,
    whitening_transform,
)
from .regions import (
    Verdict,
    RegionLabel,
    Clause,
    CLAUSES,
    rho_delta,
    region_classify,
)

__all__ = [
    # Parameters
    'ArwParams',
    'ScaleSet',
    'PARAM_KEYS',
    'EXPONENT_NAMES',
    'derive_scales',
    'delta_for_sample_size',
    'load_params_file',
    # Sampling
    'MeanVector',
    'PrecisionMatrix',
    'LabeledDataset',
    'WhiteningTransform',
    'sample_mu',
    'sample_precision',
    'sample_gaussian',
    'sample_dataset',
    'spectral_bound',
    'spectral_norm',
    'whitening_transform',
    # Regions
    'Verdict',
    'RegionLabel',
    'Clause',
    'CLAUSES',
    'rho_delta',
    'region_classify',
]
