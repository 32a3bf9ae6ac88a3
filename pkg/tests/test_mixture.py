"""Mixture family: closed-form theta map, Newton inversion, likelihood."""

import json

import numpy as np
import pytest

from dualflat.geometry import DomainError, Point, fd_gradient
from dualflat.models.mixture import (MixtureModel, MixtureNLL, invert_theta, load_components,
                                     nll_grad_weights, overlapping_windows_mixture)


@pytest.fixture
def model():
    return overlapping_windows_mixture()


def test_density_at_uniform_weights(model):
    # hand oracle: p(x) = (1/4) sum_k p_k(x); overlap points carry 2/3 mass
    probs = model.density(np.full(3, 0.25))
    assert probs[0] == pytest.approx(1 / 6, abs=1e-15)
    assert probs[1] == pytest.approx(1 / 12, abs=1e-15)
    expected = 0.25 * model.components.sum(axis=0)
    np.testing.assert_allclose(probs, expected, atol=1e-15)
    assert probs.sum() == pytest.approx(1.0, abs=1e-12)


def test_theta_vanishes_at_symmetric_point(model):
    np.testing.assert_allclose(model.theta_from_eta(np.full(3, 0.25)), np.zeros(3), atol=1e-12)


def test_inverse_of_symmetric_point(model):
    np.testing.assert_allclose(model.eta_from_theta(np.zeros(3)), np.full(3, 0.25), atol=1e-10)


def test_roundtrips(model):
    rng = np.random.default_rng(0)
    for _ in range(20):
        eta = rng.dirichlet(np.ones(4))[:3]
        back = model.eta_from_theta(model.theta_from_eta(eta))
        assert np.max(np.abs(back - eta)) < 1e-8


def test_warm_start_speeds_newton(model):
    # optimizer-scale moves: a warm start from the previous iterate keeps
    # the inversion within a 10-step budget
    rng = np.random.default_rng(3)
    eta = np.array([0.3, 0.25, 0.2])
    theta = model.theta_from_eta(eta)
    for _ in range(20):
        theta_next = theta + rng.normal(0.0, 0.05, 3)
        _, iters = invert_theta(model, theta_next, warm_start=eta)
        assert iters <= 10
        eta = model.eta_from_theta(theta_next, warm_start=eta)
        theta = theta_next


def test_identical_components_rejected():
    table = np.array([[0.5, 0.5, 0.0], [0.5, 0.5, 0.0], [0.0, 0.0, 1.0]])
    with pytest.raises(ValueError, match="rank deficient"):
        MixtureModel(table)


def test_invalid_tables_rejected():
    with pytest.raises(ValueError):
        MixtureModel(np.array([[0.5, 0.6], [0.5, 0.5]]))
    with pytest.raises(ValueError):
        MixtureModel(np.array([[-0.1, 1.1], [0.5, 0.5]]))


def test_jacobian_is_spd(model):
    rng = np.random.default_rng(1)
    for _ in range(5):
        eta = rng.dirichlet(np.ones(4) * 2)[:3]
        eigenvalues = np.linalg.eigvalsh(model.theta_jacobian(eta))
        assert np.min(eigenvalues) > 0


def test_jacobian_matches_fd(model):
    eta = np.array([0.3, 0.25, 0.2])
    jac = model.theta_jacobian(eta)
    fd = np.vstack([fd_gradient(lambda e, i=i: model.theta_from_eta(e)[i], eta)
                    for i in range(3)])
    np.testing.assert_allclose(jac, fd, rtol=1e-4, atol=1e-6)


def test_theta_image_flag(model):
    assert model.theta_image_is_full
    assert not MixtureModel(np.array([[0.7, 0.2, 0.1], [0.1, 0.2, 0.7]])).theta_image_is_full


class TestMixtureNLL:
    def test_stationary_at_model_frequencies(self, model):
        eta = np.array([0.3, 0.25, 0.2])
        nll = MixtureNLL(model, model.density(eta), 100)
        np.testing.assert_allclose(nll.grad_eta(Point.from_eta(model, eta)), np.zeros(3), atol=1e-12)

    def test_gradients_match_fd(self, model):
        rng = np.random.default_rng(4)
        counts = rng.multinomial(500, model.density(np.array([0.3, 0.3, 0.2])))
        nll = MixtureNLL(model, counts / 500, 500)
        point = Point.from_eta(model, np.full(3, 0.25))
        fd_eta = fd_gradient(lambda e: nll.value(Point.from_eta(model, e)), point.eta)
        np.testing.assert_allclose(nll.grad_eta(point), fd_eta, rtol=1e-4, atol=1e-6)
        fd_theta = fd_gradient(lambda th: nll.value(Point.from_theta(model, th)), point.theta)
        np.testing.assert_allclose(nll.grad_theta(point), fd_theta, rtol=1e-4, atol=1e-6)

    def test_full_weight_gradient_consistent(self, model):
        # the reduced eta-gradient is the difference form of the full one
        rng = np.random.default_rng(5)
        counts = rng.multinomial(300, model.density(np.full(3, 0.25)))
        freqs = counts / 300
        nll = MixtureNLL(model, freqs, 300)
        eta = np.array([0.22, 0.31, 0.27])
        full = nll_grad_weights(model, freqs, 300, np.append(eta, 1 - eta.sum()))
        np.testing.assert_allclose(nll.grad_eta(Point.from_eta(model, eta)),
                                   full[:3] - full[3], atol=1e-9)

    def test_mass_off_support_rejected(self):
        # components never touch the middle point of a 3-point space
        table = np.array([[1.0, 0.0, 0.0], [0.0, 0.0, 1.0]])
        model = MixtureModel(table)
        with pytest.raises(ValueError, match="support"):
            MixtureNLL(model, np.array([0.5, 0.2, 0.3]), 10)


def test_json_loader(tmp_path, model):
    path = tmp_path / "components.json"
    path.write_text(json.dumps({"omega_size": 8, "components": model.components.tolist()}))
    loaded = load_components(path)
    np.testing.assert_allclose(loaded.components, model.components)
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"omega_size": 5, "components": model.components.tolist()}))
    with pytest.raises(ValueError):
        load_components(bad)
