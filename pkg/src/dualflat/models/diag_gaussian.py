"""Diagonal-covariance Gaussian family in natural / expectation coordinates.

For d independent scalar Gaussians N(mu_j, sigma_j^2) the natural parameters
are ``theta = (mu / sigma^2, -1 / (2 sigma^2))`` and the expectation
parameters ``eta = (mu, mu^2 + sigma^2)``, each laid out as the d first-order
entries followed by the d second-order entries (dimension 2d).  Both maps and
their inverses are closed form; the theta-domain is R^d x (negative reals)^d
and the eta-domain requires ``eta_{d+j} > eta_j^2``.
"""

from __future__ import annotations

import numpy as np

from ..geometry import DomainError, DuallyFlatModel
from ..validation import DOMAIN_MARGIN, as_vector

_HALF_LOG_2PI = 0.5 * np.log(2.0 * np.pi)


class DiagGaussianModel(DuallyFlatModel):
    """Product of ``d`` univariate Gaussians; manifold dimension ``2 d``."""

    def __init__(self, d: int):
        d = int(d)
        if d < 1:
            raise ValueError("need at least one Gaussian coordinate")
        self.d = d
        self.dim = 2 * d

    def _split(self, vec):
        return vec[:self.d], vec[self.d:]

    def theta_from_musigma(self, mu, sigma) -> np.ndarray:
        mu = as_vector(mu, self.d, "mu")
        sigma = as_vector(sigma, self.d, "sigma")
        if np.any(sigma <= 0):
            raise DomainError("sigma must be positive")
        var = sigma ** 2
        return np.concatenate([mu / var, -0.5 / var])

    def eta_from_musigma(self, mu, sigma) -> np.ndarray:
        mu = as_vector(mu, self.d, "mu")
        sigma = as_vector(sigma, self.d, "sigma")
        if np.any(sigma <= 0):
            raise DomainError("sigma must be positive")
        return np.concatenate([mu, mu ** 2 + sigma ** 2])

    def musigma_from_theta(self, theta) -> tuple[np.ndarray, np.ndarray]:
        theta = as_vector(theta, self.dim, "theta")
        t1, t2 = self._split(theta)
        if np.any(t2 >= 0):
            raise DomainError("second-order theta entries must be negative")
        var = -0.5 / t2
        return t1 * var, np.sqrt(var)

    def musigma_from_eta(self, eta) -> tuple[np.ndarray, np.ndarray]:
        eta = as_vector(eta, self.dim, "eta")
        e1, e2 = self._split(eta)
        var = e2 - e1 ** 2
        if np.any(var <= 0):
            raise DomainError("eta violates the variance constraint eta_{d+j} > eta_j^2")
        return e1, np.sqrt(var)

    def psi(self, theta) -> float:
        theta = as_vector(theta, self.dim, "theta")
        t1, t2 = self._split(theta)
        if np.any(t2 >= 0):
            raise DomainError("second-order theta entries must be negative")
        return float(np.sum(-t1 ** 2 / (4.0 * t2) - 0.5 * np.log(-2.0 * t2) + _HALF_LOG_2PI))

    def eta_from_theta(self, theta, warm_start=None) -> np.ndarray:
        mu, sigma = self.musigma_from_theta(theta)
        return np.concatenate([mu, mu ** 2 + sigma ** 2])

    def theta_from_eta(self, eta, warm_start=None) -> np.ndarray:
        mu, sigma = self.musigma_from_eta(eta)
        var = sigma ** 2
        return np.concatenate([mu / var, -0.5 / var])

    def metric_theta(self, theta) -> np.ndarray:
        mu, sigma = self.musigma_from_theta(theta)
        var = sigma ** 2
        idx = np.arange(self.d)
        metric = np.zeros((self.dim, self.dim))
        metric[idx, idx] = var
        metric[idx, self.d + idx] = 2.0 * mu * var
        metric[self.d + idx, idx] = 2.0 * mu * var
        metric[self.d + idx, self.d + idx] = 4.0 * mu ** 2 * var + 2.0 * var ** 2
        return metric

    def theta_in_domain(self, theta) -> bool:
        theta = np.asarray(theta, dtype=float)
        if theta.shape != (self.dim,) or not np.all(np.isfinite(theta)):
            return False
        return bool(np.all(theta[self.d:] < -DOMAIN_MARGIN))

    def eta_in_domain(self, eta) -> bool:
        eta = np.asarray(eta, dtype=float)
        if eta.shape != (self.dim,) or not np.all(np.isfinite(eta)):
            return False
        e1, e2 = self._split(eta)
        return bool(np.all(e2 - e1 ** 2 > DOMAIN_MARGIN))
