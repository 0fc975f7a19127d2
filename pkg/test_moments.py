import math

import numpy as np
import pytest

from conftest import make_params, random_spd
from qdaphase.arw import MeanVector, PrecisionMatrix
from qdaphase.classify import TrainedClassifier, Variant, ideal_qda
from qdaphase.errors import ParameterError, PositiveDefiniteError
from qdaphase.moments import (
    QuadFormSpec,
    estimate_mr,
    hellinger_approx,
    hellinger_exact,
    impossibility_indicator,
    mc_quad_form,
    quad_form_moments,
)
from qdaphase.rng import stream


def constant_model(p: int, C: float) -> TrainedClassifier:
    zeros = np.zeros(p)
    return TrainedClassifier(variant=Variant.LDA, quad=None, d=zeros, d_sel=np.zeros(p, dtype=np.int8),
                             weights=zeros, t=0.0, C=C)


class TestQuadForms:
    def test_chi_square(self):
        spec = QuadFormSpec(A=np.eye(7), d=np.zeros(7), mu=np.zeros(7), Sigma=np.eye(7))
        mean, variance = quad_form_moments(spec)
        assert mean == pytest.approx(7.0)
        assert variance == pytest.approx(14.0)

    def test_linear_only(self):
        d = np.array([1.0, -2.0, 0.5])
        mu = np.array([0.3, 0.1, 2.0])
        Sigma = np.diag([1.0, 2.0, 4.0])
        mean, variance = quad_form_moments(QuadFormSpec(A=np.zeros((3, 3)), d=d, mu=mu, Sigma=Sigma))
        assert mean == pytest.approx(2.0 * d @ mu)
        assert variance == pytest.approx(4.0 * d @ Sigma @ d)

    def test_monte_carlo_agrees_with_closed_form(self, rng):
        p = 4
        A = random_spd(p, rng) - np.eye(p)
        spec = QuadFormSpec(A=(A + A.T) / 2.0, d=rng.standard_normal(p), mu=0.5 * rng.standard_normal(p),
                            Sigma=random_spd(p, rng))
        mean, variance = quad_form_moments(spec)
        sample = mc_quad_form(spec, 20_000, stream(2, "mc"))
        assert abs(sample.mean - mean) <= 4.0 * sample.mean_se
        assert abs(sample.variance - variance) <= 4.0 * sample.variance_se

    def test_monte_carlo_is_reproducible(self):
        spec = QuadFormSpec(A=np.eye(3), d=np.ones(3), mu=np.zeros(3), Sigma=np.eye(3))
        assert mc_quad_form(spec, 500, stream(1, "mc")) == mc_quad_form(spec, 500, stream(1, "mc"))

    def test_too_few_reps(self):
        spec = QuadFormSpec(A=np.eye(2), d=np.zeros(2), mu=np.zeros(2), Sigma=np.eye(2))
        with pytest.raises(ParameterError):
            mc_quad_form(spec, 99, stream(0, "mc"))

    def test_validation(self):
        with pytest.raises(ParameterError):
            QuadFormSpec(A=np.array([[1.0, 2.0], [0.0, 1.0]]), d=np.zeros(2), mu=np.zeros(2), Sigma=np.eye(2))
        with pytest.raises(ParameterError):
            QuadFormSpec(A=np.eye(2), d=np.zeros(3), mu=np.zeros(2), Sigma=np.eye(2))
        with pytest.raises(PositiveDefiniteError):
            QuadFormSpec(A=np.eye(2), d=np.zeros(2), mu=np.zeros(2), Sigma=np.diag([1.0, -1.0]))


class TestMisclassification:
    def test_constant_rule(self):
        mu = MeanVector.from_values(np.ones(3))
        eye = PrecisionMatrix.identity(3)
        always_one = constant_model(3, C=1.0)
        balanced = estimate_mr(always_one, mu, eye, eye, 101, stream(0, "mr"))
        assert balanced.per_class == (1.0, 0.0)
        assert balanced.mr == 0.5
        assert balanced.se == pytest.approx(math.sqrt(0.25 / 101))
        weighted = estimate_mr(always_one, mu, eye, eye, 100, stream(0, "mr"), q=0.2)
        assert weighted.mr == pytest.approx(0.8)

    def test_well_separated_classes(self):
        mu = MeanVector.from_values(np.full(4, 5.0))
        eye = PrecisionMatrix.identity(4)
        result = estimate_mr(ideal_qda(mu, eye, eye), mu, eye, eye, 400, stream(1, "mr"))
        assert result.mr == 0.0
        assert result.se == 0.0

    def test_rate_matches_the_gaussian_tail(self):
        mu = MeanVector.from_values(np.array([0.5, 0.0]))
        eye = PrecisionMatrix.identity(2)
        result = estimate_mr(ideal_qda(mu, eye, eye), mu, eye, eye, 20_000, stream(2, "mr"))
        # linear rule with error Phi(-|mu|)
        expected = 0.5 * math.erfc(0.5 / math.sqrt(2.0))
        assert abs(result.mr - expected) <= 4.0 * result.se

    def test_validation(self):
        mu = MeanVector.from_values(np.zeros(2))
        eye = PrecisionMatrix.identity(2)
        with pytest.raises(ParameterError):
            estimate_mr(constant_model(2, 0.0), mu, eye, eye, 1, stream(0, "mr"))
        with pytest.raises(ParameterError):
            estimate_mr(constant_model(2, 0.0), mu, eye, eye, 10, stream(0, "mr"), q=1.5)


class TestHellinger:
    def test_identical_distributions(self, gaussian_pair):
        mu, omega0, _ = gaussian_pair
        assert hellinger_exact(mu, mu, omega0, omega0) == pytest.approx(1.0, abs=1e-10)

    def test_equal_means(self):
        p = 3
        zero = MeanVector.from_values(np.zeros(p))
        h = hellinger_exact(zero, zero, PrecisionMatrix.identity(p), PrecisionMatrix.from_dense(4.0 * np.eye(p)))
        assert h == pytest.approx(math.sqrt(0.8) ** p)

    def test_mean_shift_only_matches_the_approximation(self):
        mu = MeanVector.from_values(np.array([0.3, -0.2, 0.1]))
        minus = MeanVector.from_values(-mu.values)
        eye = PrecisionMatrix.identity(3)
        assert hellinger_exact(minus, mu, eye, eye) == pytest.approx(hellinger_approx(mu, eye, eye), rel=1e-12)

    def test_symmetry(self, gaussian_pair):
        mu, omega0, omega1 = gaussian_pair
        minus = MeanVector.from_values(-mu.values)
        forward = hellinger_exact(minus, mu, omega0, omega1)
        backward = hellinger_exact(mu, minus, omega1, omega0)
        assert forward == pytest.approx(backward, rel=1e-12)
        assert 0.0 < forward < 1.0

    def test_approximation_at_small_signal(self):
        p = 10
        mu = MeanVector.from_values(np.full(p, 0.05))
        minus = MeanVector.from_values(-mu.values)
        eye = PrecisionMatrix.identity(p)
        omega1 = PrecisionMatrix.from_dense(np.diag(np.full(p, 1.05)))
        exact = math.log(hellinger_exact(minus, mu, eye, omega1))
        approx = math.log(hellinger_approx(mu, eye, omega1))
        assert abs(approx - exact) <= 0.1 * abs(exact)

    def test_dimension_mismatch(self):
        mu = MeanVector.from_values(np.zeros(2))
        with pytest.raises(ParameterError):
            hellinger_exact(mu, mu, PrecisionMatrix.identity(2), PrecisionMatrix.identity(3))


class TestImpossibility:
    def test_faint_signal_is_indistinguishable(self):
        params = make_params(p=300, zeta=0.9, theta=0.6, alpha=0.9, beta=1.9, gamma=0.9)
        assert impossibility_indicator(params, draws=3, seed=1) > 0.9

    def test_strong_mean_signal_is_separable(self):
        params = make_params(p=300, zeta=0.1, theta=0.1)
        assert impossibility_indicator(params, draws=3, seed=1) < 0.1

    def test_reproducible_and_validated(self):
        params = make_params(p=100)
        assert impossibility_indicator(params, 2, seed=4) == impossibility_indicator(params, 2, seed=4)
        with pytest.raises(ParameterError):
            impossibility_indicator(params, 0)

    @pytest.mark.slow
    def test_affinity_rises_with_zeta(self):
        low = impossibility_indicator(make_params(p=2000, zeta=0.2, theta=0.3), draws=5)
        high = impossibility_indicator(make_params(p=2000, zeta=0.8, theta=0.3), draws=5)
        assert low < high
