"""Descent loops: dual-geodesic descent with domain-constrained step halving,
the exponentiated-gradient baseline, the Bradley-Terry MM algorithm, and
plain Euclidean gradient descent.

All loops share the same bookkeeping: a ``RunTrace`` records the accepted
iterates (in the update coordinates), the step size actually used at each
iteration, the number of accepted updates, and how the run ended.  Runs are
deterministic functions of their inputs.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Literal

import numpy as np

from .geometry import DuallyFlatModel, Objective, Point
from .models.bradley_terry import BradleyTerryModel, BTObservation, mm_step, nll_grad_pi
from .validation import as_vector, check_positive, check_simplex_interior

__all__ = [
    "DescentConfig",
    "StopRule",
    "RunTrace",
    "StepUnderflowError",
    "run_geodesic_descent",
    "exponentiated_gradient_step",
    "run_exponentiated_gradient",
    "run_mm",
    "run_euclidean_gd",
]

Connection = Literal["e_geodesic", "m_geodesic"]
Outcome = Literal["converged", "max_iters", "overflow", "step_underflow"]


class StepUnderflowError(RuntimeError):
    """Step halving exhausted its budget without finding an in-domain proposal."""


@dataclass(frozen=True, eq=False)
class StopRule:
    """Convergence test evaluated after every accepted update.

    kinds:
      - ``distance_to_target_eta``: Euclidean distance of eta to ``target_eta``
      - ``grad_norm_eta``: norm of the objective's eta-gradient
      - ``grad_norm_pi``: norm of the objective's ``grad_pi`` (Bradley-Terry)
    """

    kind: Literal["grad_norm_pi", "grad_norm_eta", "distance_to_target_eta"]
    epsilon: float
    target_eta: np.ndarray | None = None

    def __post_init__(self):
        if self.kind not in ("grad_norm_pi", "grad_norm_eta", "distance_to_target_eta"):
            raise ValueError(f"unknown stop rule {self.kind!r}")
        check_positive(self.epsilon, "epsilon")
        if self.kind == "distance_to_target_eta" and self.target_eta is None:
            raise ValueError("distance_to_target_eta needs target_eta")

    def statistic(self, objective: Objective, point: Point) -> float:
        if self.kind == "distance_to_target_eta":
            return float(np.linalg.norm(point.eta - self.target_eta))
        if self.kind == "grad_norm_eta":
            return float(np.linalg.norm(objective.grad_eta(point)))
        grad_pi = getattr(objective, "grad_pi", None)
        if grad_pi is None:
            raise ValueError("objective does not expose a pi-gradient")
        return float(np.linalg.norm(grad_pi(point)))


@dataclass(frozen=True, eq=False)
class DescentConfig:
    """Configuration of a dual-geodesic descent run.

    The step size resets to ``step_size`` at every iteration; halvings are
    per-proposal, not sticky.  Under ``domain_only`` a proposal is accepted
    as soon as it lies in the open domain of the update coordinates; under
    ``domain_and_decrease`` it must also strictly decrease the objective.
    """

    connection: Connection
    stop_rule: StopRule
    step_size: float = 1.0
    max_iters: int = 100_000
    max_halvings: int = 60
    halving_rule: Literal["domain_only", "domain_and_decrease"] = "domain_only"

    def __post_init__(self):
        if self.connection not in ("e_geodesic", "m_geodesic"):
            raise ValueError(f"unknown connection {self.connection!r}")
        if self.halving_rule not in ("domain_only", "domain_and_decrease"):
            raise ValueError(f"unknown halving rule {self.halving_rule!r}")
        check_positive(self.step_size, "step_size")
        if self.max_iters < 1:
            raise ValueError("max_iters must be positive")
        if not 0 <= self.max_halvings <= 60:
            raise ValueError("max_halvings must lie in [0, 60]")


@dataclass
class RunTrace:
    """History of one optimization run.

    ``iterates`` holds the initial point plus every accepted update, in the
    coordinates the method updates (theta for e-geodesic runs, eta for
    m-geodesic, strengths for MM / exponentiated gradient).  ``iterations``
    counts accepted updates; ``step_sizes_used[k]`` is ``t0 / 2**h_k`` for
    the ``h_k`` halvings taken at iteration k.
    """

    iterates: list = field(default_factory=list)
    step_sizes_used: list = field(default_factory=list)
    iterations: int = 0
    outcome: Outcome = "max_iters"
    final_point: Point | None = None


def run_geodesic_descent(model: DuallyFlatModel, objective: Objective,
                         init: Point, cfg: DescentConfig) -> RunTrace:
    """Dual-geodesic descent with per-iteration step halving.

    Each iteration evaluates the gradient the connection needs (eta-gradient
    for e-geodesic steps, theta-gradient for m-geodesic steps), proposes an
    affine update with the full step size, and halves until the proposal is
    acceptable under the halving rule.  The stop rule runs on the initial
    point and after every accepted update.
    """
    point = init
    trace = RunTrace(final_point=point)
    is_e = cfg.connection == "e_geodesic"
    trace.iterates.append(np.array(point.theta if is_e else point.eta))
    if cfg.stop_rule.statistic(objective, point) < cfg.stop_rule.epsilon:
        trace.outcome = "converged"
        return trace

    in_domain = model.theta_in_domain if is_e else model.eta_in_domain
    for iteration in range(1, cfg.max_iters + 1):
        grad = objective.grad_eta(point) if is_e else objective.grad_theta(point)
        if not np.all(np.isfinite(grad)):
            raise ValueError(f"non-finite gradient at iteration {iteration}")
        base = point.theta if is_e else point.eta
        need_decrease = cfg.halving_rule == "domain_and_decrease"
        current_value = objective.value(point) if need_decrease else None

        t = cfg.step_size
        candidate_point = None
        for _ in range(cfg.max_halvings + 1):
            proposal = base - t * grad
            if in_domain(proposal):
                if is_e:
                    candidate_point = Point.from_theta(model, proposal, eta_hint=point.cached_eta())
                else:
                    candidate_point = Point.from_eta(model, proposal)
                if not need_decrease or objective.value(candidate_point) < current_value:
                    break
                candidate_point = None
            t *= 0.5
        else:
            trace.outcome = "step_underflow"
            return trace

        point = candidate_point
        trace.iterates.append(np.array(proposal))
        trace.step_sizes_used.append(t)
        trace.iterations = iteration
        trace.final_point = point
        if cfg.stop_rule.statistic(objective, point) < cfg.stop_rule.epsilon:
            trace.outcome = "converged"
            return trace

    trace.outcome = "max_iters"
    return trace


def exponentiated_gradient_step(weights, euclid_grad, t: float) -> np.ndarray | None:
    """Multiplicative simplex update ``w_j exp(-t g_j)``, renormalized.

    Deliberately *not* shifted for overflow safety: a non-finite exponential,
    a degenerate normalizer, or a weight underflowing to exact zero returns
    None so callers can report an overflow outcome instead of crashing.
    """
    weights = check_simplex_interior(weights, "weights")
    euclid_grad = np.asarray(euclid_grad, dtype=float)
    if euclid_grad.shape != weights.shape:
        raise ValueError("gradient and weights must have the same length")
    t = check_positive(t, "t", allow_zero=True)
    with np.errstate(over="ignore", under="ignore", invalid="ignore"):
        scaled = weights * np.exp(-t * euclid_grad)
        total = scaled.sum()
        if not np.all(np.isfinite(scaled)) or not np.isfinite(total) or total <= 0:
            return None
        updated = scaled / total
        if np.any(updated == 0.0):
            return None
        return updated


def run_exponentiated_gradient(grad_fn: Callable[[np.ndarray], np.ndarray],
                               stop_stat: Callable[[np.ndarray], float],
                               init_weights, step_size: float, epsilon: float,
                               max_iters: int = 100_000) -> RunTrace:
    """Exponentiated-gradient loop on the probability simplex.

    ``grad_fn`` returns the Euclidean gradient in the full simplex vector;
    ``stop_stat`` maps the current weights to the convergence statistic.
    """
    weights = check_simplex_interior(init_weights, "init_weights")
    check_positive(epsilon, "epsilon")
    trace = RunTrace(iterates=[weights.copy()])
    if stop_stat(weights) < epsilon:
        trace.outcome = "converged"
        return trace
    for iteration in range(1, max_iters + 1):
        updated = exponentiated_gradient_step(weights, grad_fn(weights), step_size)
        if updated is None:
            trace.outcome = "overflow"
            return trace
        weights = updated
        trace.iterates.append(weights.copy())
        trace.step_sizes_used.append(step_size)
        trace.iterations = iteration
        if stop_stat(weights) < epsilon:
            trace.outcome = "converged"
            return trace
    trace.outcome = "max_iters"
    return trace


def run_mm(model: BradleyTerryModel, observation: BTObservation, init_pi=None,
           epsilon: float = 1e-5, max_iters: int = 100_000) -> RunTrace:
    """Minorize-maximize iteration for Bradley-Terry strengths.

    Stops when the NLL gradient with respect to pi_1..pi_(N-1) drops below
    ``epsilon``.  Raises when some player has no wins, since the MM iterate
    then collapses onto the simplex boundary.
    """
    if np.any(observation.totals == 0):
        losers = np.flatnonzero(observation.totals == 0)
        raise ValueError(f"players {losers.tolist()} have no wins; MM hits the simplex boundary")
    pi = (np.full(model.n_players, 1.0 / model.n_players) if init_pi is None
          else check_simplex_interior(init_pi, "init_pi"))
    check_positive(epsilon, "epsilon")
    trace = RunTrace(iterates=[pi.copy()])
    if np.linalg.norm(nll_grad_pi(model, observation, pi)) < epsilon:
        trace.outcome = "converged"
        return trace
    for iteration in range(1, max_iters + 1):
        pi = mm_step(model, observation, pi)
        trace.iterates.append(pi.copy())
        trace.iterations = iteration
        if np.linalg.norm(nll_grad_pi(model, observation, pi)) < epsilon:
            trace.outcome = "converged"
            return trace
    trace.outcome = "max_iters"
    return trace


def run_euclidean_gd(grad_fn: Callable[[np.ndarray], np.ndarray], init, step_size: float,
                     n_iters: int) -> RunTrace:
    """Fixed-budget Euclidean gradient descent ``x <- x - t grad(x)``.

    Runs exactly ``n_iters`` updates (no stop rule) and reports ``max_iters``.
    """
    x = as_vector(init, name="init")
    check_positive(step_size, "step_size")
    trace = RunTrace(iterates=[x.copy()])
    for iteration in range(1, int(n_iters) + 1):
        x = x - step_size * grad_fn(x)
        if not np.all(np.isfinite(x)):
            raise ValueError(f"non-finite iterate at iteration {iteration}")
        trace.iterates.append(x.copy())
        trace.step_sizes_used.append(step_size)
        trace.iterations = iteration
    trace.outcome = "max_iters"
    return trace
