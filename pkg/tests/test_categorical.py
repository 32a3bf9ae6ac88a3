"""Categorical family maps and likelihood."""

import numpy as np
import pytest

from dualflat.geometry import DomainError, Point, fd_gradient
from dualflat.models.categorical import CategoricalModel, CategoricalNLL, frequencies


@pytest.fixture
def model():
    return CategoricalModel(3)


def test_uniform_symmetry(model):
    np.testing.assert_allclose(model.theta_from_eta([1 / 3, 1 / 3]), [0.0, 0.0], atol=1e-15)
    assert model.psi(np.zeros(2)) == pytest.approx(np.log(3), abs=1e-14)


def test_log_odds_map(model):
    np.testing.assert_allclose(model.theta_from_eta([0.5, 0.3]),
                               [np.log(2.5), np.log(1.5)], atol=1e-14)


def test_roundtrip_far_from_uniform(model):
    theta = np.array([5.0, -5.0])
    back = model.theta_from_eta(model.eta_from_theta(theta))
    np.testing.assert_allclose(back, theta, atol=1e-10)


def test_boundary_rejected(model):
    with pytest.raises(DomainError):
        model.theta_from_eta([0.0, 0.5])
    with pytest.raises(DomainError):
        model.theta_from_eta([0.6, 0.4])


def test_domain_predicates(model):
    assert model.eta_in_domain(np.array([0.2, 0.3]))
    assert not model.eta_in_domain(np.array([0.2, 0.8]))
    assert not model.eta_in_domain(np.array([-0.1, 0.3]))
    assert model.theta_in_domain(np.array([100.0, -100.0]))
    assert not model.theta_in_domain(np.array([np.nan, 0.0]))


def test_softmax_overflow_safe(model):
    eta = model.eta_from_theta(np.array([800.0, 0.0]))
    assert np.all(np.isfinite(eta))
    assert eta[0] == pytest.approx(1.0, abs=1e-12)


def test_metric_is_simplex_covariance(model):
    eta = np.array([0.5, 0.3])
    metric = model.metric_theta(model.theta_from_eta(eta))
    np.testing.assert_allclose(metric, np.diag(eta) - np.outer(eta, eta), atol=1e-12)


def test_frequencies():
    np.testing.assert_allclose(frequencies([0, 1, 2, 0], 3), [0.5, 0.25, 0.25])
    with pytest.raises(ValueError):
        frequencies([0, 3], 3)
    with pytest.raises(ValueError):
        frequencies([], 3)


class TestCategoricalNLL:
    def test_value_at_uniform(self, model):
        # one observation of each of the three cells
        nll = CategoricalNLL(model, frequencies([0, 1, 2], 3), 3)
        start = Point.from_eta(model, np.full(2, 1 / 3))
        assert nll.value(start) == pytest.approx(3 * np.log(3), abs=1e-12)

    def test_stationary_at_frequencies(self, model):
        freqs = np.array([0.5, 0.3, 0.2])
        nll = CategoricalNLL(model, freqs, 10)
        point = Point.from_eta(model, freqs[:2])
        np.testing.assert_allclose(nll.grad_theta(point), np.zeros(2), atol=1e-14)

    def test_gradients_match_fd(self, model):
        nll = CategoricalNLL(model, np.array([0.5, 0.3, 0.2]), 7)
        point = Point.from_eta(model, np.array([0.25, 0.45]))
        fd_theta = fd_gradient(lambda th: nll.value(Point.from_theta(model, th)), point.theta)
        fd_eta = fd_gradient(lambda e: nll.value(Point.from_eta(model, e)), point.eta)
        np.testing.assert_allclose(nll.grad_theta(point), fd_theta, rtol=1e-4, atol=1e-6)
        np.testing.assert_allclose(nll.grad_eta(point), fd_eta, rtol=1e-4, atol=1e-6)

    def test_invalid_frequencies(self, model):
        with pytest.raises(ValueError):
            CategoricalNLL(model, np.array([0.5, 0.3, 0.3]), 5)
        with pytest.raises(ValueError):
            CategoricalNLL(model, np.array([0.5, 0.3, 0.2]), 0)
