"""Categorical (finite-support) family as a dually flat space.

An n-category distribution is coordinatized by the first n-1 cell
probabilities ``eta`` (the expectation parameters) or by the log-odds
against the last cell ``theta^i = log(eta_i / eta_n)`` (the natural
parameters), with potential ``psi(theta) = log(1 + sum_i exp theta^i)``.
"""

from __future__ import annotations

import numpy as np
from scipy.special import logsumexp

from ..geometry import DomainError, DuallyFlatModel, Objective, Point
from ..validation import DOMAIN_MARGIN, as_vector


class CategoricalModel(DuallyFlatModel):
    """Distributions over ``n_categories`` outcomes, dimension ``n - 1``.

    The theta-domain is all of R^(n-1); the eta-domain is the open simplex
    interior (all cells positive, including the implicit last one).
    """

    def __init__(self, n_categories: int):
        n_categories = int(n_categories)
        if n_categories < 2:
            raise ValueError("need at least two categories")
        self.n_categories = n_categories
        self.dim = n_categories - 1

    def psi(self, theta) -> float:
        theta = as_vector(theta, self.dim, "theta")
        return float(logsumexp(np.append(theta, 0.0)))

    def eta_from_theta(self, theta, warm_start=None) -> np.ndarray:
        theta = as_vector(theta, self.dim, "theta")
        full = np.append(theta, 0.0)
        full -= full.max()  # overflow-safe softmax
        expd = np.exp(full)
        return (expd / expd.sum())[:-1]

    def theta_from_eta(self, eta, warm_start=None) -> np.ndarray:
        eta = as_vector(eta, self.dim, "eta")
        if not self.eta_in_domain(eta):
            raise DomainError("eta lies on or outside the simplex boundary")
        last = 1.0 - eta.sum()
        return np.log(eta) - np.log(last)

    def metric_theta(self, theta) -> np.ndarray:
        eta = self.eta_from_theta(theta)
        return np.diag(eta) - np.outer(eta, eta)

    def theta_in_domain(self, theta) -> bool:
        theta = np.asarray(theta, dtype=float)
        return theta.shape == (self.dim,) and bool(np.all(np.isfinite(theta)))

    def eta_in_domain(self, eta) -> bool:
        eta = np.asarray(eta, dtype=float)
        if eta.shape != (self.dim,) or not np.all(np.isfinite(eta)):
            return False
        return bool(np.all(eta > DOMAIN_MARGIN) and eta.sum() < 1.0 - DOMAIN_MARGIN)

    def full_probs(self, eta) -> np.ndarray:
        """All n cell probabilities, appending the implicit last cell."""
        eta = as_vector(eta, self.dim, "eta")
        return np.append(eta, 1.0 - eta.sum())


def frequencies(samples, n_categories: int) -> np.ndarray:
    """Empirical cell frequencies of 0-based outcome labels (length n, sums to 1)."""
    samples = np.asarray(samples, dtype=int)
    if samples.size == 0:
        raise ValueError("need at least one observation")
    if samples.min() < 0 or samples.max() >= n_categories:
        raise ValueError("labels out of range")
    counts = np.bincount(samples, minlength=n_categories)
    return counts / samples.size


class CategoricalNLL(Objective):
    """Negative log-likelihood of observed cell frequencies.

    ``value = n_obs * (psi(theta) - <theta, freqs[:-1]>)``; its theta-gradient
    is ``n_obs * (eta - freqs[:-1])``, so the maximizer is the empirical
    frequency vector and one m-geodesic step with t = 1/n_obs reaches it.
    """

    def __init__(self, model: CategoricalModel, freqs, n_obs: int):
        super().__init__(model)
        freqs = as_vector(freqs, model.n_categories, "freqs")
        if np.any(freqs < 0) or abs(freqs.sum() - 1.0) > 1e-9:
            raise ValueError("freqs must be nonnegative and sum to one")
        if n_obs <= 0:
            raise ValueError("n_obs must be positive")
        self.freqs = freqs
        self.n_obs = int(n_obs)

    def value(self, point: Point) -> float:
        theta = point.theta
        return float(self.n_obs * (self.model.psi(theta) - theta @ self.freqs[:-1]))

    def grad_theta(self, point: Point) -> np.ndarray:
        return self.n_obs * (point.eta - self.freqs[:-1])
