"""Finite mixture family with fixed component tables over a finite sample space.

For component distributions p_1 .. p_n on Omega the family is
``p(x | eta) = sum_k eta_k p_k(x) + (1 - sum eta_k) p_n(x)`` with the mixture
weights as eta-affine coordinates.  The dual theta-coordinates are

    theta^i = sum_x (p_i(x) - p_n(x)) log p(x | eta),

the gradient of the negative-entropy potential ``phi(eta) = sum_x p log p``.
The inverse map eta(theta) has no closed form and is computed by Newton
iteration on ``theta(eta) = theta`` with the SPD Jacobian

    J_ij(eta) = sum_x (p_i - p_n)(x) (p_j - p_n)(x) / p(x | eta).
"""

from __future__ import annotations

import json

import numpy as np

from ..geometry import DomainError, DuallyFlatModel, NewtonError, Objective, Point, solve_spd
from ..validation import DOMAIN_MARGIN, as_vector

_NEWTON_TOL = 1e-10
_NEWTON_MAX_ITERS = 100
_NEWTON_MAX_HALVINGS = 30


class MixtureModel(DuallyFlatModel):
    """Mixture of ``n`` fixed probability tables; dimension ``n - 1``.

    Parameters
    ----------
    components : array-like, shape (n, omega_size)
        Rows are probability tables (nonnegative, each summing to one).
        Rejected when the differences ``p_i - p_n`` are rank deficient, since
        the theta map is then not injective.
    theta_image_is_full : bool
        Whether theta(S) is known to be all of R^(n-1) for this instance.
        True for the bundled benchmark instance; the general image may be a
        proper subset and is not characterized here.
    """

    def __init__(self, components, theta_image_is_full: bool = False):
        comp = np.asarray(components, dtype=float)
        if comp.ndim != 2 or comp.shape[0] < 2:
            raise ValueError("components must be a (n >= 2) x omega_size table")
        if np.any(comp < 0) or np.any(np.abs(comp.sum(axis=1) - 1.0) > 1e-8):
            raise ValueError("each component row must be a probability table")
        self.components = comp
        self.n_components, self.omega_size = comp.shape
        self.dim = self.n_components - 1
        self._diffs = comp[:-1] - comp[-1]
        if np.linalg.matrix_rank(self._diffs) < self.dim:
            raise ValueError("component differences are rank deficient: theta map not injective")
        self._support = comp.sum(axis=0) > 0
        self.theta_image_is_full = bool(theta_image_is_full)

    def density(self, eta) -> np.ndarray:
        """Mixture probabilities over Omega at interior weights."""
        eta = as_vector(eta, self.dim, "eta")
        if not self.eta_in_domain(eta):
            raise DomainError("eta lies on or outside the weight-simplex boundary")
        return self.components[-1] + eta @ self._diffs

    def theta_from_eta(self, eta, warm_start=None) -> np.ndarray:
        p = self.density(eta)
        sup = self._support
        return self._diffs[:, sup] @ np.log(p[sup])

    def theta_jacobian(self, eta) -> np.ndarray:
        """SPD Jacobian d theta / d eta (also the metric in eta-coordinates)."""
        p = self.density(eta)
        sup = self._support
        d = self._diffs[:, sup]
        return (d / p[sup]) @ d.T

    def eta_from_theta(self, theta, warm_start=None) -> np.ndarray:
        eta, _ = invert_theta(self, theta, warm_start=warm_start)
        return eta

    def psi(self, theta) -> float:
        eta = self.eta_from_theta(theta)
        theta = as_vector(theta, self.dim, "theta")
        return float(theta @ eta - self._negentropy(eta))

    def _negentropy(self, eta) -> float:
        p = self.density(eta)
        sup = self._support
        return float(p[sup] @ np.log(p[sup]))

    def metric_theta(self, theta) -> np.ndarray:
        eta = self.eta_from_theta(theta)
        return np.linalg.inv(self.theta_jacobian(eta))

    def theta_in_domain(self, theta) -> bool:
        # Exact only when theta_image_is_full; otherwise a necessary check.
        theta = np.asarray(theta, dtype=float)
        return theta.shape == (self.dim,) and bool(np.all(np.isfinite(theta)))

    def eta_in_domain(self, eta) -> bool:
        eta = np.asarray(eta, dtype=float)
        if eta.shape != (self.dim,) or not np.all(np.isfinite(eta)):
            return False
        return bool(np.all(eta > DOMAIN_MARGIN) and eta.sum() < 1.0 - DOMAIN_MARGIN)

    def uniform_weights(self) -> np.ndarray:
        return np.full(self.dim, 1.0 / self.n_components)


def invert_theta(model: MixtureModel, theta, warm_start=None) -> tuple[np.ndarray, int]:
    """Newton inversion of the theta map; returns (eta, iterations used).

    Undamped steps, falling back to half-step damping when an iterate would
    leave the open simplex (shrunk by the domain margin).  Raises
    ``NewtonError`` on divergence.
    """
    theta = as_vector(theta, model.dim, "theta")
    eta = model.uniform_weights() if warm_start is None else as_vector(warm_start, model.dim, "warm_start")
    if not model.eta_in_domain(eta):
        raise DomainError("warm start lies outside the weight simplex interior")
    for iteration in range(_NEWTON_MAX_ITERS):
        residual = model.theta_from_eta(eta) - theta
        if np.max(np.abs(residual)) < _NEWTON_TOL:
            return eta, iteration
        step = -solve_spd(model.theta_jacobian(eta), residual)
        scale = 1.0
        for _ in range(_NEWTON_MAX_HALVINGS):
            candidate = eta + scale * step
            if model.eta_in_domain(candidate):
                break
            scale *= 0.5
        else:
            raise NewtonError("Newton iterate could not stay inside the weight simplex")
        eta = candidate
    raise NewtonError(f"theta inversion did not converge in {_NEWTON_MAX_ITERS} iterations")


def overlapping_windows_mixture() -> MixtureModel:
    """The bundled benchmark instance: four uniform windows on an 8-point cycle.

    Components are uniform on {0,1,2}, {2,3,4}, {4,5,6}, {6,7,0}; adjacent
    windows overlap in one point.  The theta image is all of R^3.
    """
    windows = [(0, 1, 2), (2, 3, 4), (4, 5, 6), (6, 7, 0)]
    comp = np.zeros((4, 8))
    for row, window in zip(comp, windows):
        row[list(window)] = 1.0 / 3.0
    return MixtureModel(comp, theta_image_is_full=True)


def load_components(path) -> MixtureModel:
    """Read a component table from JSON ``{"omega_size": int, "components": [[...], ...]}``."""
    with open(path) as handle:
        payload = json.load(handle)
    comp = np.asarray(payload["components"], dtype=float)
    if comp.ndim != 2 or comp.shape[1] != int(payload["omega_size"]):
        raise ValueError("components do not match omega_size")
    return MixtureModel(comp)


class MixtureNLL(Objective):
    """Negative log-likelihood of sample frequencies over Omega.

    ``value = -n_obs * sum_x freqs_x log p(x | eta)`` with eta-gradient
    ``-n_obs * diffs @ (freqs / p)``; the theta-gradient solves
    ``J v = grad_eta`` with the Newton Jacobian.
    """

    def __init__(self, model: MixtureModel, freqs, n_obs: int):
        super().__init__(model)
        freqs = as_vector(freqs, model.omega_size, "freqs")
        if np.any(freqs < 0) or abs(freqs.sum() - 1.0) > 1e-9:
            raise ValueError("freqs must be nonnegative and sum to one")
        if np.any(freqs[~model._support] > 0):
            raise ValueError("observed mass outside the mixture support")
        if n_obs <= 0:
            raise ValueError("n_obs must be positive")
        self.freqs = freqs
        self.n_obs = int(n_obs)

    def value(self, point: Point) -> float:
        p = self.model.density(point.eta)
        sup = self.model._support
        return float(-self.n_obs * (self.freqs[sup] @ np.log(p[sup])))

    def grad_eta(self, point: Point) -> np.ndarray:
        p = self.model.density(point.eta)
        sup = self.model._support
        ratio = self.freqs[sup] / p[sup]
        return -self.n_obs * (self.model._diffs[:, sup] @ ratio)

    def grad_theta(self, point: Point) -> np.ndarray:
        return solve_spd(self.model.theta_jacobian(point.eta), self.grad_eta(point))


def nll_grad_weights(model: MixtureModel, freqs, n_obs: int, weights) -> np.ndarray:
    """Euclidean NLL gradient in the *full* weight vector (length n).

    This is the gradient the exponentiated-gradient baseline consumes;
    ``weights`` is the whole simplex vector including the last component.
    """
    freqs = as_vector(freqs, model.omega_size, "freqs")
    weights = as_vector(weights, model.n_components, "weights")
    p = weights @ model.components
    sup = model._support
    ratio = freqs[sup] / p[sup]
    return -n_obs * (model.components[:, sup] @ ratio)
