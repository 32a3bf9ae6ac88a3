"""Variational inference for multinomial logistic regression.

Each entry of the M x D weight matrix W gets an independent Gaussian
posterior factor N(mu_j, sigma_j^2).  The objective is the Monte-Carlo
approximation of KL(q(W | mu, sigma), p(W | X, Y)) up to the constant
log p(Y | X): with vec(W_k) = mu + sigma * eps_k over K fixed standard
normal draws,

    h(mu, sigma) = (1/K) sum_k [ log q(W_k | mu, sigma)
                                 - log p(Y | X, W_k) - log p(W_k) ],

all three terms closed-form Gaussian / categorical sums.  Holding the noise
draws fixed (common random numbers) makes h a smooth deterministic function
of (mu, sigma), so its gradients can be chain-ruled into any coordinate
system of the diagonal Gaussian family: the softplus parameterization
(mu, rho) with sigma = log(1 + exp rho) used by plain gradient descent, or
the natural / expectation coordinates used by the dual-geodesic updates.

Vector layout: weights, mu, sigma, rho, and noise rows are C-order ravels of
the (M, D) weight matrix.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np
from scipy.special import expit, logsumexp

from .models.diag_gaussian import DiagGaussianModel
from .optimizers import StepUnderflowError
from .validation import as_vector, check_positive

_HALF_LOG_2PI = 0.5 * np.log(2.0 * np.pi)

__all__ = [
    "VIDataset",
    "VIState",
    "MCConfig",
    "softmax",
    "cat_logpdf",
    "mc_objective",
    "mc_grad_musigma",
    "mc_grad_rho",
    "mc_grad_dual",
    "vi_single_iteration",
    "predict",
    "predict_labels",
    "accuracy",
    "split_train_test",
    "load_dataset",
]


@dataclass(frozen=True)
class VIDataset:
    """Design matrix X (N x M) and one-hot responses Y (N x D)."""

    X: np.ndarray
    Y: np.ndarray

    def __post_init__(self):
        X = np.asarray(self.X, dtype=float)
        Y = np.asarray(self.Y, dtype=float)
        if X.ndim != 2 or Y.ndim != 2 or X.shape[0] != Y.shape[0]:
            raise ValueError("X and Y must be 2-D with matching row counts")
        if not np.all(np.isfinite(X)):
            raise ValueError("X contains non-finite entries")
        if Y.size and not (np.all((Y == 0) | (Y == 1)) and np.all(Y.sum(axis=1) == 1)):
            raise ValueError("Y rows must be one-hot")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "Y", Y)

    @property
    def n_samples(self) -> int:
        return self.X.shape[0]

    @property
    def n_features(self) -> int:
        return self.X.shape[1]

    @property
    def n_classes(self) -> int:
        return self.Y.shape[1]


@dataclass(frozen=True)
class VIState:
    """Mean-field parameters: mu, sigma > 0, and the softplus preimage rho."""

    mu: np.ndarray
    sigma: np.ndarray
    rho: np.ndarray

    def __post_init__(self):
        mu = as_vector(self.mu, name="mu")
        sigma = as_vector(self.sigma, mu.size, "sigma")
        rho = as_vector(self.rho, mu.size, "rho")
        if np.any(sigma <= 0):
            raise ValueError("sigma must be positive")
        if np.max(np.abs(np.logaddexp(0.0, rho) - sigma)) > 1e-12 * (1.0 + np.max(sigma)):
            raise ValueError("sigma and rho are inconsistent")
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "sigma", sigma)
        object.__setattr__(self, "rho", rho)

    @classmethod
    def from_murho(cls, mu, rho) -> "VIState":
        rho = as_vector(rho, name="rho")
        return cls(mu=np.asarray(mu, dtype=float), sigma=np.logaddexp(0.0, rho), rho=rho)

    @classmethod
    def from_musigma(cls, mu, sigma) -> "VIState":
        sigma = as_vector(sigma, name="sigma")
        if np.any(sigma <= 0):
            raise ValueError("sigma must be positive")
        # stable inverse softplus: log(e^s - 1) = s + log1p(-e^(-s))
        clipped = np.minimum(sigma, 30.0)
        rho = np.where(sigma > 30.0,
                       sigma + np.log1p(-np.exp(-clipped)),
                       np.log(np.expm1(clipped)))
        return cls(mu=np.asarray(mu, dtype=float), sigma=sigma, rho=rho)

    @property
    def n_weights(self) -> int:
        return self.mu.size


@dataclass(frozen=True)
class MCConfig:
    """Monte-Carlo settings: K objective draws, L prediction draws, prior
    precision, the master seed, and whether noise is held fixed across all
    evaluations inside one optimizer iteration (common random numbers)."""

    n_mc_samples: int = 1000
    n_pred_samples: int = 10
    prior_precision: float = 1.0
    seed: int = 0
    common_noise: bool = True

    def __post_init__(self):
        if self.n_mc_samples < 1 or self.n_pred_samples < 1:
            raise ValueError("sample counts must be at least 1")
        check_positive(self.prior_precision, "prior_precision")


def softmax(a, axis: int = -1) -> np.ndarray:
    """Overflow-safe softmax along an axis."""
    a = np.asarray(a, dtype=float)
    shifted = a - a.max(axis=axis, keepdims=True)
    expd = np.exp(shifted)
    return expd / expd.sum(axis=axis, keepdims=True)


def cat_logpdf(y_onehot, probs) -> float:
    """log Cat(y | s) = sum_k y_k log s_k for strictly positive s."""
    y_onehot = np.asarray(y_onehot, dtype=float)
    probs = np.asarray(probs, dtype=float)
    if np.any(probs <= 0):
        raise ValueError("probabilities must be strictly positive")
    return float(y_onehot @ np.log(probs))


def _weights_from_noise(state: VIState, noise: np.ndarray) -> np.ndarray:
    noise = np.asarray(noise, dtype=float)
    if noise.ndim != 2 or noise.shape[1] != state.n_weights:
        raise ValueError(f"noise must have shape (K, {state.n_weights})")
    return state.mu + state.sigma * noise


def _log_lik_and_grad(data: VIDataset, weights: np.ndarray):
    """Per-draw data log-likelihood and its gradient in vec(W)."""
    n_draws = weights.shape[0]
    if data.n_samples == 0:
        return np.zeros(n_draws), np.zeros_like(weights)
    W = weights.reshape(n_draws, data.n_features, data.n_classes)
    logits = np.einsum("nm,kmd->knd", data.X, W)
    log_norm = logsumexp(logits, axis=-1)
    loglik = np.einsum("nd,knd->k", data.Y, logits) - log_norm.sum(axis=1)
    probs = softmax(logits, axis=-1)
    grad = np.einsum("nm,knd->kmd", data.X, data.Y[None, :, :] - probs)
    return loglik, grad.reshape(n_draws, -1)


def mc_objective(data: VIDataset, state: VIState, cfg: MCConfig, noise) -> float:
    """Monte-Carlo KL objective at the given fixed noise draws (K x MD)."""
    weights = _weights_from_noise(state, noise)
    n_draws = weights.shape[0]
    lam = cfg.prior_precision
    log_q = -np.sum(np.log(state.sigma)) - 0.5 * (noise ** 2).sum(axis=1) - state.n_weights * _HALF_LOG_2PI
    log_prior = (0.5 * state.n_weights * (np.log(lam) - 2.0 * _HALF_LOG_2PI)
                 - 0.5 * lam * (weights ** 2).sum(axis=1))
    loglik, _ = _log_lik_and_grad(data, weights)
    value = (log_q - loglik - log_prior).sum() / n_draws
    if not np.isfinite(value):
        raise ValueError("non-finite Monte-Carlo objective")
    return float(value)


def mc_grad_musigma(data: VIDataset, state: VIState, cfg: MCConfig, noise):
    """Reparameterized gradients (d/d mu, d/d sigma) at fixed noise draws."""
    noise = np.asarray(noise, dtype=float)
    weights = _weights_from_noise(state, noise)
    _, lik_grad = _log_lik_and_grad(data, weights)
    # per-draw gradient of (-loglik - logprior) in vec(W)
    descent = -lik_grad + cfg.prior_precision * weights
    grad_mu = descent.mean(axis=0)
    grad_sigma = -1.0 / state.sigma + (descent * noise).mean(axis=0)
    return grad_mu, grad_sigma


def mc_grad_rho(data: VIDataset, state: VIState, cfg: MCConfig, noise):
    """Gradients in the unconstrained (mu, rho) parameterization."""
    grad_mu, grad_sigma = mc_grad_musigma(data, state, cfg, noise)
    return grad_mu, grad_sigma * expit(state.rho)


def mc_grad_dual(data: VIDataset, state: VIState, cfg: MCConfig, noise):
    """Gradients in the natural (theta) and expectation (eta) coordinates.

    Chain rule through the closed-form Jacobians of the diagonal-Gaussian
    coordinate maps; equals the metric-solve of the companion gradient.
    """
    grad_mu, grad_sigma = mc_grad_musigma(data, state, cfg, noise)
    mu, sigma = state.mu, state.sigma
    var = sigma ** 2
    grad_theta = np.concatenate([var * grad_mu,
                                 2.0 * mu * var * grad_mu + sigma * var * grad_sigma])
    grad_eta = np.concatenate([grad_mu - (mu / sigma) * grad_sigma,
                               grad_sigma / (2.0 * sigma)])
    return grad_theta, grad_eta


def vi_single_iteration(data: VIDataset, state: VIState, method: str, step_size: float,
                        cfg: MCConfig, noise, max_halvings: int = 60) -> VIState:
    """One accepted update of the variational parameters.

    ``gradient`` takes a Euclidean step on (mu, rho).  The geodesic methods
    step in theta (e) or eta (m) coordinates of the diagonal Gaussian family,
    halving the step size until the proposal lies in the respective open
    domain.  The same noise draws feed every evaluation in the iteration.
    """
    check_positive(step_size, "step_size", allow_zero=True)
    if method == "gradient":
        grad_mu, grad_rho = mc_grad_rho(data, state, cfg, noise)
        return VIState.from_murho(state.mu - step_size * grad_mu,
                                  state.rho - step_size * grad_rho)
    if method not in ("e_geodesic", "m_geodesic"):
        raise ValueError(f"unknown method {method!r}")
    model = DiagGaussianModel(state.n_weights)
    grad_theta, grad_eta = mc_grad_dual(data, state, cfg, noise)
    if method == "e_geodesic":
        base, grad, in_domain = model.theta_from_musigma(state.mu, state.sigma), grad_eta, model.theta_in_domain
    else:
        base, grad, in_domain = model.eta_from_musigma(state.mu, state.sigma), grad_theta, model.eta_in_domain
    t = step_size
    for _ in range(max_halvings + 1):
        proposal = base - t * grad
        if in_domain(proposal):
            break
        t *= 0.5
    else:
        raise StepUnderflowError(f"no in-domain {method} proposal after {max_halvings} halvings")
    if method == "e_geodesic":
        mu, sigma = model.musigma_from_theta(proposal)
    else:
        mu, sigma = model.musigma_from_eta(proposal)
    return VIState.from_musigma(mu, sigma)


def _posterior_mean_probs(X: np.ndarray, state: VIState, noise: np.ndarray,
                          n_classes: int) -> np.ndarray:
    weights = _weights_from_noise(state, noise)
    W = weights.reshape(weights.shape[0], -1, n_classes)
    logits = np.einsum("nm,kmd->knd", X, W)
    return softmax(logits, axis=-1).mean(axis=0)


def _as_rng(rng) -> np.random.Generator:
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.default_rng(rng)


def predict(x_new, state: VIState, n_classes: int, n_draws: int = 10, rng=None, noise=None) -> np.ndarray:
    """One-hot prediction for a single input: argmax of the posterior-mean
    softmax over ``n_draws`` weight draws, ties broken to the lowest index."""
    x_new = as_vector(x_new, name="x_new")
    if noise is None:
        noise = _as_rng(rng).standard_normal((int(n_draws), state.n_weights))
    probs = _posterior_mean_probs(x_new[None, :], state, np.asarray(noise, dtype=float), n_classes)[0]
    onehot = np.zeros(n_classes)
    onehot[int(np.argmax(probs))] = 1.0
    return onehot


def predict_labels(X, state: VIState, n_classes: int, n_draws: int = 10, rng=None, noise=None) -> np.ndarray:
    """Predicted class indices for a batch of inputs."""
    X = np.asarray(X, dtype=float)
    if noise is None:
        noise = _as_rng(rng).standard_normal((int(n_draws), state.n_weights))
    probs = _posterior_mean_probs(X, state, np.asarray(noise, dtype=float), n_classes)
    return np.argmax(probs, axis=1)


def accuracy(data: VIDataset, state: VIState, n_draws: int = 10, rng=None, noise=None) -> float:
    """Fraction of rows whose predicted one-hot matches Y exactly."""
    if data.n_samples == 0:
        raise ValueError("cannot score an empty dataset")
    predicted = predict_labels(data.X, state, data.n_classes, n_draws, rng=rng, noise=noise)
    return float(np.mean(predicted == np.argmax(data.Y, axis=1)))


def split_train_test(data: VIDataset, test_fraction: float, rng) -> tuple[VIDataset, VIDataset]:
    """Random row split; the test part gets ``round(test_fraction * N)`` rows."""
    if not 0.0 < test_fraction < 1.0:
        raise ValueError("test_fraction must lie in (0, 1)")
    n_test = int(round(test_fraction * data.n_samples))
    order = _as_rng(rng).permutation(data.n_samples)
    test_idx, train_idx = order[:n_test], order[n_test:]
    return (VIDataset(data.X[train_idx], data.Y[train_idx]),
            VIDataset(data.X[test_idx], data.Y[test_idx]))


def load_dataset(path) -> VIDataset:
    """Read a dataset CSV with header ``x0..x{M-1},y0..y{D-1}``."""
    with open(path, newline="") as handle:
        reader = csv.reader(handle)
        header = next(reader, None)
        if header is None:
            raise ValueError("missing header row")
        n_features = sum(1 for name in header if name.startswith("x"))
        n_classes = len(header) - n_features
        if n_features == 0 or n_classes == 0:
            raise ValueError("header must name x columns then y columns")
        rows = [[float(cell) for cell in row] for row in reader if row]
    table = np.asarray(rows, dtype=float)
    return VIDataset(table[:, :n_features], table[:, n_features:])
