"""Monte-Carlo VI objective, gradients in all coordinate systems, prediction."""

import numpy as np
import pytest

from dualflat.datagen import GenConfig, generate, to_csv
from dualflat.geometry import fd_gradient
from dualflat.models.diag_gaussian import DiagGaussianModel
from dualflat.optimizers import run_euclidean_gd
from dualflat.varinf import (MCConfig, VIDataset, VIState, accuracy, cat_logpdf, load_dataset,
                             mc_grad_dual, mc_grad_musigma, mc_grad_rho, mc_objective, predict,
                             predict_labels, softmax, split_train_test, vi_single_iteration)

HALF_LOG_2PI = 0.5 * np.log(2.0 * np.pi)


def empty_dataset(n_features=1, n_classes=2):
    return VIDataset(np.zeros((0, n_features)), np.zeros((0, n_classes)))


@pytest.fixture
def small_data():
    return generate(GenConfig(40, 3, 3, seed=9))


@pytest.fixture
def rand_state():
    rng = np.random.default_rng(13)
    return VIState.from_murho(rng.normal(0.0, 0.5, 9), rng.normal(0.0, 0.5, 9))


class TestBasics:
    def test_softmax_symmetry(self):
        np.testing.assert_allclose(softmax(np.zeros(2)), [0.5, 0.5])

    def test_softmax_shift_invariance_stress(self):
        out = softmax(np.array([1000.0, 0.0]))
        assert np.all(np.isfinite(out))
        np.testing.assert_allclose(out, [1.0, 0.0], atol=1e-12)

    def test_cat_logpdf(self):
        assert cat_logpdf([1.0, 0.0], [0.5, 0.5]) == pytest.approx(np.log(0.5))
        with pytest.raises(ValueError):
            cat_logpdf([1.0, 0.0], [0.0, 1.0])

    def test_state_consistency_enforced(self):
        with pytest.raises(ValueError):
            VIState(mu=np.zeros(2), sigma=np.ones(2), rho=np.zeros(2))
        state = VIState.from_musigma(np.zeros(2), np.array([3.0, 40.0]))
        np.testing.assert_allclose(np.logaddexp(0.0, state.rho), state.sigma, atol=1e-12)

    def test_dataset_validation(self):
        with pytest.raises(ValueError):
            VIDataset(np.zeros((2, 2)), np.array([[1.0, 1.0], [0.0, 1.0]]))


class TestObjective:
    def test_prior_matches_posterior_at_origin(self):
        # q equals the unit-variance prior at W = mu = 0: the terms cancel
        state = VIState.from_musigma(np.zeros(2), np.ones(2))
        cfg = MCConfig(n_mc_samples=1, prior_precision=1.0)
        value = mc_objective(empty_dataset(1, 2), state, cfg, np.zeros((1, 2)))
        assert value == pytest.approx(0.0, abs=1e-12)

    def test_prior_term_alone(self):
        # -log p(W = 0) for one standard-Gaussian weight is log(2 pi) / 2
        state = VIState.from_musigma(np.zeros(1), np.ones(1))
        cfg = MCConfig(n_mc_samples=1, prior_precision=1.0)
        value = mc_objective(empty_dataset(1, 1), state, cfg, np.zeros((1, 1)))
        log_q_term = -HALF_LOG_2PI  # log q(0 | 0, 1)
        prior_term = HALF_LOG_2PI   # -log p(0)
        assert value == pytest.approx(log_q_term + prior_term, abs=1e-12)
        assert prior_term == pytest.approx(0.918939, abs=1e-6)

    def test_symmetric_point_has_zero_mu_gradient(self):
        state = VIState.from_musigma(np.zeros(3), np.ones(3))
        cfg = MCConfig(n_mc_samples=1, prior_precision=1.0)
        grad_mu, _ = mc_grad_musigma(empty_dataset(1, 3), state, cfg, np.zeros((1, 3)))
        np.testing.assert_allclose(grad_mu, np.zeros(3), atol=1e-12)


class TestGradients:
    def test_all_parameterizations_match_fd(self, small_data, rand_state):
        cfg = MCConfig(n_mc_samples=12, prior_precision=2.0)
        rng = np.random.default_rng(3)
        noise = rng.standard_normal((12, 9))
        state = rand_state
        model = DiagGaussianModel(9)

        grad_mu, grad_sigma = mc_grad_musigma(small_data, state, cfg, noise)
        _, grad_rho = mc_grad_rho(small_data, state, cfg, noise)
        grad_theta, grad_eta = mc_grad_dual(small_data, state, cfg, noise)

        checks = [
            (grad_mu, fd_gradient(lambda m: mc_objective(
                small_data, VIState.from_musigma(m, state.sigma), cfg, noise), state.mu)),
            (grad_sigma, fd_gradient(lambda s: mc_objective(
                small_data, VIState.from_musigma(state.mu, s), cfg, noise), state.sigma)),
            (grad_rho, fd_gradient(lambda r: mc_objective(
                small_data, VIState.from_murho(state.mu, r), cfg, noise), state.rho)),
            (grad_theta, fd_gradient(lambda th: mc_objective(
                small_data, VIState.from_musigma(*model.musigma_from_theta(th)), cfg, noise),
                model.theta_from_musigma(state.mu, state.sigma))),
            (grad_eta, fd_gradient(lambda e: mc_objective(
                small_data, VIState.from_musigma(*model.musigma_from_eta(e)), cfg, noise),
                model.eta_from_musigma(state.mu, state.sigma))),
        ]
        for analytic, fd in checks:
            rel = np.max(np.abs(analytic - fd) / (1.0 + np.abs(fd)))
            assert rel < 1e-3

    def test_dual_gradients_metric_consistent(self, small_data, rand_state):
        cfg = MCConfig(n_mc_samples=8)
        noise = np.random.default_rng(4).standard_normal((8, 9))
        grad_theta, grad_eta = mc_grad_dual(small_data, rand_state, cfg, noise)
        model = DiagGaussianModel(9)
        theta = model.theta_from_musigma(rand_state.mu, rand_state.sigma)
        derived = np.linalg.solve(model.metric_theta(theta), grad_theta)
        assert np.max(np.abs(derived - grad_eta)) < 1e-8

    def test_objective_deterministic_given_noise(self, small_data, rand_state):
        cfg = MCConfig(n_mc_samples=8)
        noise = np.random.default_rng(5).standard_normal((8, 9))
        first = mc_objective(small_data, rand_state, cfg, noise)
        second = mc_objective(small_data, rand_state, cfg, noise)
        assert first == second


def test_empty_data_minimizer_is_prior():
    # with standardized noise the finite-sample optimum is exactly
    # (mu, sigma) = (0, lambda^{-1/2}); 500 plain GD steps reach it
    lam = 1.0
    rng = np.random.default_rng(6)
    noise = rng.standard_normal((64, 4))
    noise = (noise - noise.mean(axis=0)) / noise.std(axis=0)
    cfg = MCConfig(n_mc_samples=64, prior_precision=lam)
    data = empty_dataset(2, 2)

    def grad(packed):
        state = VIState.from_musigma(packed[:4], packed[4:])
        gm, gs = mc_grad_musigma(data, state, cfg, noise)
        return np.concatenate([gm, gs])

    start = np.concatenate([rng.normal(0.0, 0.5, 4), rng.uniform(0.5, 2.0, 4)])
    trace = run_euclidean_gd(grad, start, 0.2, 500)
    target = np.concatenate([np.zeros(4), np.full(4, lam ** -0.5)])
    assert np.max(np.abs(trace.iterates[-1] - target)) < 1e-3


class TestSingleIteration:
    def test_zero_step_leaves_state(self, small_data, rand_state):
        cfg = MCConfig(n_mc_samples=4)
        noise = np.random.default_rng(7).standard_normal((4, 9))
        for method in ("gradient", "e_geodesic", "m_geodesic"):
            updated = vi_single_iteration(small_data, rand_state, method, 0.0, cfg, noise)
            np.testing.assert_allclose(updated.mu, rand_state.mu, atol=1e-12)
            np.testing.assert_allclose(updated.sigma, rand_state.sigma, atol=1e-12)

    def test_huge_step_halves_into_domain(self, small_data, rand_state):
        cfg = MCConfig(n_mc_samples=4)
        noise = np.random.default_rng(8).standard_normal((4, 9))
        updated = vi_single_iteration(small_data, rand_state, "e_geodesic", 1e8, cfg, noise)
        assert np.all(updated.sigma > 0)
        assert np.all(np.isfinite(updated.mu))

    def test_m_geodesic_halves_more_often_than_e(self, small_data):
        # the eta-domain constraint bites long before the theta one does
        model = DiagGaussianModel(9)
        cfg = MCConfig(n_mc_samples=64)
        rng = np.random.default_rng(9)
        halvings = {"e_geodesic": 0, "m_geodesic": 0}
        for _ in range(20):
            state = VIState.from_murho(rng.standard_normal(9), rng.standard_normal(9))
            noise = rng.standard_normal((64, 9))
            grad_theta, grad_eta = mc_grad_dual(small_data, state, cfg, noise)
            for method, base, grad, in_domain in (
                    ("e_geodesic", model.theta_from_musigma(state.mu, state.sigma), grad_eta, model.theta_in_domain),
                    ("m_geodesic", model.eta_from_musigma(state.mu, state.sigma), grad_theta, model.eta_in_domain)):
                t = 1.0
                while not in_domain(base - t * grad):
                    halvings[method] += 1
                    t *= 0.5
        assert halvings["m_geodesic"] > halvings["e_geodesic"]

    def test_unknown_method(self, small_data, rand_state):
        cfg = MCConfig(n_mc_samples=4)
        with pytest.raises(ValueError):
            vi_single_iteration(small_data, rand_state, "levi_civita", 1.0, cfg, np.zeros((4, 9)))


class TestPrediction:
    def test_degenerate_posterior_is_argmax(self):
        W = np.array([[2.0, -1.0], [0.5, 1.5]])  # M=2, D=2
        state = VIState.from_musigma(W.ravel(), np.full(4, 1e-8))
        x_new = np.array([1.0, 0.0])
        out = predict(x_new, state, n_classes=2, n_draws=5, rng=0)
        expected = np.argmax(W.T @ x_new)
        assert out[expected] == 1.0

    def test_fixed_draw_deterministic(self):
        state = VIState.from_musigma(np.zeros(4), np.ones(4))
        noise = np.random.default_rng(11).standard_normal((1, 4))
        a = predict(np.array([0.3, -0.2]), state, 2, noise=noise)
        b = predict(np.array([0.3, -0.2]), state, 2, noise=noise)
        np.testing.assert_array_equal(a, b)

    def test_tie_breaks_to_lowest_index(self):
        state = VIState.from_musigma(np.zeros(6), np.full(6, 1e-9))
        out = predict(np.zeros(2), state, n_classes=3, n_draws=3, rng=1)
        np.testing.assert_array_equal(out, [1.0, 0.0, 0.0])

    def test_perfect_accuracy_on_separated_data(self):
        X = np.vstack([np.full((10, 1), -5.0), np.full((10, 1), 5.0)])
        Y = np.zeros((20, 2))
        Y[:10, 0] = 1.0
        Y[10:, 1] = 1.0
        data = VIDataset(X, Y)
        W = np.array([[-3.0, 3.0]])  # one feature, two classes
        state = VIState.from_musigma(W.ravel(), np.full(2, 1e-8))
        assert accuracy(data, state, n_draws=10, rng=2) == 1.0

    def test_accuracy_bounds(self, small_data, rand_state):
        value = accuracy(small_data, rand_state, n_draws=5, rng=3)
        assert 0.0 <= value <= 1.0

    def test_predict_labels_shape(self, small_data, rand_state):
        labels = predict_labels(small_data.X, rand_state, small_data.n_classes, 5, rng=4)
        assert labels.shape == (small_data.n_samples,)


def test_split_and_csv_roundtrip(tmp_path, small_data):
    train, test = split_train_test(small_data, 0.3, np.random.default_rng(5))
    assert test.n_samples == 12 and train.n_samples == 28
    path = tmp_path / "data.csv"
    to_csv(small_data, path)
    loaded = load_dataset(path)
    np.testing.assert_allclose(loaded.X, small_data.X)
    np.testing.assert_array_equal(loaded.Y, small_data.Y)
