"""Shared fixtures: an isolated settings directory and small ARW draws."""

import numpy as np
import pytest

from qdaphase.arw import (
    ArwParams,
    LabeledDataset,
    MeanVector,
    PrecisionMatrix,
    derive_scales,
    sample_dataset,
    sample_mu,
    sample_precision,
)
from qdaphase.config_manager import ConfigManager, reset_config, set_config
from qdaphase.rng import stream


@pytest.fixture(autouse=True)
def isolated_config(tmp_path):
    """Every test sees default settings that no other test has touched."""
    manager = ConfigManager(config_dir=str(tmp_path / "config"))
    set_config(manager)
    yield manager
    reset_config()


def make_params(**changes) -> ArwParams:
    """A valid point in the strong-signal PCS regime, with overrides."""
    values = dict(p=200, delta=0.8, zeta=0.3, theta=0.25, alpha=0.2, beta=1.2, gamma=0.6)
    values.update(changes)
    return ArwParams(**values)


def random_spd(p: int, rng: np.random.Generator, ridge: float = 0.5) -> np.ndarray:
    """A well-conditioned symmetric positive definite matrix."""
    A = rng.standard_normal((p, p))
    M = A @ A.T / p + ridge * np.eye(p)
    return (M + M.T) / 2.0


@pytest.fixture
def rng():
    return stream(12345, "tests")


@pytest.fixture
def arw_draw():
    """(params, mu, omega0, omega1, train) at p=60 with Omega0 = I."""
    params = make_params(p=60)
    scales = derive_scales(params)
    generator = stream(7, "fixture")
    mu = sample_mu(scales, params.p, generator)
    omega1 = sample_precision(scales, params.p, generator)
    omega0 = PrecisionMatrix.identity(params.p)
    train = sample_dataset(mu, omega0, omega1, 400, 0.5, generator)
    return params, mu, omega0, omega1, train


@pytest.fixture
def gaussian_pair():
    """Two random well-conditioned Gaussians at p=5 for density checks."""
    generator = stream(3, "pair")
    p = 5
    mu = MeanVector.from_values(0.3 * generator.standard_normal(p))
    omega0 = PrecisionMatrix.from_dense(random_spd(p, generator))
    omega1 = PrecisionMatrix.from_dense(random_spd(p, generator))
    return mu, omega0, omega1


def two_class_data(n0: int, n1: int, p: int, shift: float, seed: int = 0) -> LabeledDataset:
    """Isotropic classes centred at -shift and +shift on every feature."""
    generator = stream(seed, "two-class")
    X = np.vstack([generator.standard_normal((n0, p)) - shift,
                   generator.standard_normal((n1, p)) + shift])
    y = np.concatenate([np.zeros(n0, dtype=int), np.ones(n1, dtype=int)])
    return LabeledDataset(X=X, y=y)
