"""Dually flat geometry: dual coordinates, potentials, divergences, geodesic steps.

A dually flat space carries two flat affine structures whose coordinate
systems theta and eta are linked through a convex potential ``psi``::

    eta = grad psi(theta),        theta = grad phi(eta),
    phi(eta) = <theta(eta), eta> - psi(theta(eta)),

with ``phi`` the Legendre conjugate of ``psi``.  Straight lines in theta are
geodesics of one connection, straight lines in eta are geodesics of the dual
connection, and the Riemannian metric in theta-coordinates is the Hessian of
``psi``.  Steepest descent along either geodesic family reduces to an affine
update in the matching coordinate system with the gradient taken in the
*companion* coordinates:

    theta_new = theta - t * D_eta f        (e-geodesic step)
    eta_new   = eta   - t * D_theta f      (m-geodesic step)

Divergence convention
---------------------
The canonical (Bregman) divergence used throughout is

    B(r, q) = psi(theta(r)) + phi(eta(q)) - <theta(r), eta(q)>,

which is nonnegative and vanishes iff ``r == q``.  For an exponential family
``B(r, q)`` equals the Kullback-Leibler divergence with expectation taken
under the *second* argument, ``sum_x q(x) log(q(x) / r(x))``.  All objectives
in this package follow that orientation.
"""

from __future__ import annotations

import abc

import numpy as np
import scipy.linalg

from .validation import DOMAIN_MARGIN, as_vector, check_positive

__all__ = [
    "DomainError",
    "NewtonError",
    "DuallyFlatModel",
    "Point",
    "Objective",
    "BregmanObjective",
    "DualBregmanObjective",
    "e_geodesic_step",
    "m_geodesic_step",
    "bregman_divergence",
    "dual_potential",
    "mirror_descent_step_numeric",
    "fd_gradient",
    "solve_spd",
    "DOMAIN_MARGIN",
]


class DomainError(ValueError):
    """A point lies outside the open domain of a coordinate system."""


class NewtonError(RuntimeError):
    """An iterative inversion or inner minimization failed to converge."""


def solve_spd(matrix: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    """Solve ``matrix @ x = rhs`` for a symmetric positive-definite matrix.

    Uses a Cholesky factorization; raises ``numpy.linalg.LinAlgError`` when
    the matrix is not positive definite.
    """
    try:
        factor = scipy.linalg.cho_factor(matrix, lower=True, check_finite=False)
    except scipy.linalg.LinAlgError as exc:
        raise np.linalg.LinAlgError(f"matrix is not positive definite: {exc}") from exc
    return scipy.linalg.cho_solve(factor, rhs, check_finite=False)


class DuallyFlatModel(abc.ABC):
    """Capability contract for a dually flat family.

    Concrete families provide the potential, both coordinate maps (either of
    which may be iterative), the theta-coordinate metric (the Hessian of the
    potential), and strict open-domain predicates for both coordinate
    systems.  ``dim`` is the manifold dimension; all coordinate vectors have
    that length.
    """

    dim: int

    @abc.abstractmethod
    def psi(self, theta: np.ndarray) -> float:
        """Convex potential evaluated at theta-coordinates."""

    @abc.abstractmethod
    def eta_from_theta(self, theta: np.ndarray, warm_start: np.ndarray | None = None) -> np.ndarray:
        """Gradient map ``grad psi``; ``warm_start`` may seed iterative inverses."""

    @abc.abstractmethod
    def theta_from_eta(self, eta: np.ndarray, warm_start: np.ndarray | None = None) -> np.ndarray:
        """Inverse coordinate map (possibly numeric)."""

    @abc.abstractmethod
    def metric_theta(self, theta: np.ndarray) -> np.ndarray:
        """Riemannian metric in theta-coordinates, the Hessian of ``psi``."""

    @abc.abstractmethod
    def theta_in_domain(self, theta: np.ndarray) -> bool:
        """Strict membership test for the open theta-domain."""

    @abc.abstractmethod
    def eta_in_domain(self, eta: np.ndarray) -> bool:
        """Strict membership test for the open eta-domain."""


class Point:
    """A model point storing whichever dual coordinate is currently native.

    The companion coordinate is computed lazily through the model's maps and
    cached, so repeated gradient evaluations do not re-run iterative
    inversions.  ``eta_hint`` warm-starts an iterative ``eta_from_theta``.
    Instances are immutable once both coordinates are realized and safe to
    share across threads.
    """

    __slots__ = ("model", "_theta", "_eta", "_eta_hint")

    def __init__(self, model: DuallyFlatModel, theta=None, eta=None, eta_hint=None):
        if theta is None and eta is None:
            raise ValueError("a point needs theta or eta coordinates")
        self.model = model
        self._theta = None if theta is None else as_vector(theta, model.dim, "theta")
        self._eta = None if eta is None else as_vector(eta, model.dim, "eta")
        self._eta_hint = None if eta_hint is None else as_vector(eta_hint, model.dim, "eta_hint")

    @classmethod
    def from_theta(cls, model, theta, eta_hint=None) -> "Point":
        return cls(model, theta=theta, eta_hint=eta_hint)

    @classmethod
    def from_eta(cls, model, eta) -> "Point":
        return cls(model, eta=eta)

    @property
    def theta(self) -> np.ndarray:
        if self._theta is None:
            self._theta = self.model.theta_from_eta(self._eta)
        return self._theta

    @property
    def eta(self) -> np.ndarray:
        if self._eta is None:
            self._eta = self.model.eta_from_theta(self._theta, warm_start=self._eta_hint)
        return self._eta

    def cached_eta(self) -> np.ndarray | None:
        """Return eta if it has already been realized, else None."""
        return self._eta


def e_geodesic_step(model: DuallyFlatModel, theta, grad_eta, t: float) -> np.ndarray:
    """One step along the theta-affine geodesic: ``theta - t * grad_eta``.

    ``grad_eta`` is the gradient of the objective in eta-coordinates.  The
    result is *not* required to lie in the theta-domain; callers enforce
    membership, typically by step halving.
    """
    theta = as_vector(theta, model.dim, "theta")
    grad_eta = as_vector(grad_eta, model.dim, "grad_eta")
    t = check_positive(t, "t", allow_zero=True)
    return theta - t * grad_eta


def m_geodesic_step(model: DuallyFlatModel, eta, grad_theta, t: float) -> np.ndarray:
    """One step along the eta-affine geodesic: ``eta - t * grad_theta``."""
    eta = as_vector(eta, model.dim, "eta")
    grad_theta = as_vector(grad_theta, model.dim, "grad_theta")
    t = check_positive(t, "t", allow_zero=True)
    return eta - t * grad_theta


def dual_potential(model: DuallyFlatModel, eta) -> float:
    """Legendre conjugate ``phi(eta) = <theta(eta), eta> - psi(theta(eta))``."""
    eta = as_vector(eta, model.dim, "eta")
    theta = model.theta_from_eta(eta)
    return float(theta @ eta - model.psi(theta))


def bregman_divergence(model: DuallyFlatModel, r: Point, q: Point) -> float:
    """Canonical divergence ``B(r, q)``; see the module docstring for the
    orientation convention.  Nonnegative, zero iff the points coincide."""
    if not model.theta_in_domain(r.theta):
        raise DomainError("first argument lies outside the theta-domain")
    if not model.eta_in_domain(q.eta):
        raise DomainError("second argument lies outside the eta-domain")
    return float(model.psi(r.theta) + dual_potential(model, q.eta) - r.theta @ q.eta)


class Objective(abc.ABC):
    """Scalar function on a dually flat model with gradients in both
    coordinate systems.

    Subclasses implement ``value`` and at least one of ``grad_theta`` /
    ``grad_eta``; the missing gradient is derived through the metric via the
    chain rule ``D_theta f = G(theta) D_eta f`` (and its SPD solve for the
    reverse direction).
    """

    def __init__(self, model: DuallyFlatModel):
        if (type(self).grad_theta is Objective.grad_theta
                and type(self).grad_eta is Objective.grad_eta):
            raise TypeError(f"{type(self).__name__} must supply at least one analytic gradient")
        self.model = model

    @abc.abstractmethod
    def value(self, point: Point) -> float:
        """Objective value at a model point."""

    def grad_theta(self, point: Point) -> np.ndarray:
        return self.model.metric_theta(point.theta) @ self.grad_eta(point)

    def grad_eta(self, point: Point) -> np.ndarray:
        return solve_spd(self.model.metric_theta(point.theta), self.grad_theta(point))


class BregmanObjective(Objective):
    """``f(r) = B(r, target)``: divergence to a fixed target in the second slot.

    Its theta-gradient is ``eta(r) - eta(target)``, so a single m-geodesic
    step with t = 1 lands exactly on the target.
    """

    def __init__(self, model: DuallyFlatModel, target: Point):
        super().__init__(model)
        self.target = target
        self._phi_target = dual_potential(model, target.eta)

    def value(self, point: Point) -> float:
        return float(self.model.psi(point.theta) + self._phi_target - point.theta @ self.target.eta)

    def grad_theta(self, point: Point) -> np.ndarray:
        return point.eta - self.target.eta


class DualBregmanObjective(Objective):
    """``h(r) = B(target, r)``: divergence with the target in the first slot.

    Its eta-gradient is ``theta(r) - theta(target)``, so a single e-geodesic
    step with t = 1 lands exactly on the target.
    """

    def __init__(self, model: DuallyFlatModel, target: Point):
        super().__init__(model)
        self.target = target
        self._psi_target = float(model.psi(target.theta))

    def value(self, point: Point) -> float:
        return float(self._psi_target + dual_potential(self.model, point.eta)
                     - self.target.theta @ point.eta)

    def grad_eta(self, point: Point) -> np.ndarray:
        return point.theta - self.target.theta


def mirror_descent_step_numeric(model: DuallyFlatModel, theta_k, grad_theta, t: float,
                                grad_tol: float = 1e-12, max_iters: int = 100) -> np.ndarray:
    """Numerically minimize ``<grad, theta> + B_psi(theta, theta_k) / t``.

    ``B_psi`` here is the Bregman divergence of the potential as a convex
    function on theta-space.  Damped Newton on the strictly convex inner
    objective, stopping when the inner gradient norm drops below
    ``grad_tol``.  This is a test oracle (the closed-form equivalent is the
    dual-geodesic step), not a production path.
    """
    theta_k = as_vector(theta_k, model.dim, "theta_k")
    grad_theta = as_vector(grad_theta, model.dim, "grad_theta")
    t = check_positive(t, "t")
    eta_k = model.eta_from_theta(theta_k)
    psi_k = model.psi(theta_k)

    def inner(th: np.ndarray) -> float:
        breg = model.psi(th) - psi_k - eta_k @ (th - theta_k)
        return float(grad_theta @ th + breg / t)

    def inner_grad(th: np.ndarray) -> np.ndarray:
        return grad_theta + (model.eta_from_theta(th) - eta_k) / t

    theta = theta_k.copy()
    value = inner(theta)
    grad_norm = np.linalg.norm(inner_grad(theta))
    for _ in range(max_iters):
        if grad_norm <= grad_tol:
            return theta
        step = -t * solve_spd(model.metric_theta(theta), inner_grad(theta))
        scale = 1.0
        for _ in range(60):
            candidate = theta + scale * step
            if model.theta_in_domain(candidate):
                cand_value = inner(candidate)
                cand_norm = np.linalg.norm(inner_grad(candidate))
                # progress in either the value or the gradient norm; the
                # value alone stalls at rounding before grad_tol is reached
                if cand_value < value or cand_norm < grad_norm:
                    break
            scale *= 0.5
        else:
            raise NewtonError("mirror-descent inner step could not make progress")
        theta, value, grad_norm = candidate, cand_value, cand_norm
    raise NewtonError(f"mirror-descent oracle did not reach gradient norm {grad_tol}")


def fd_gradient(fn, x, h: float = 1e-6) -> np.ndarray:
    """Central-difference gradient of a scalar function.

    The per-coordinate step is ``h * (1 + |x_i|)``, the double-precision
    sweet spot for central differences at the default ``h``.
    """
    x = as_vector(x, name="x")
    h = check_positive(h, "h")
    grad = np.empty_like(x)
    for i in range(x.size):
        step = h * (1.0 + abs(x[i]))
        forward = x.copy()
        backward = x.copy()
        forward[i] += step
        backward[i] -= step
        hi, lo = fn(forward), fn(backward)
        if not (np.isfinite(hi) and np.isfinite(lo)):
            raise ValueError(f"function evaluated non-finite near coordinate {i}")
        grad[i] = (hi - lo) / (2.0 * step)
    return grad
