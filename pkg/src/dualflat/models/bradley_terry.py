"""Bradley-Terry pairwise-comparison model as an exponential family.

With strengths ``pi_i > 0`` normalized to sum to one, player i beats player j
with probability ``pi_i / (pi_i + pi_j)``.  For a fixed symmetric match-count
matrix ``n_ij`` the model is an exponential family in the log-odds
coordinates ``theta^i = log(pi_i / pi_N)`` (theta^N == 0) with potential

    psi(theta) = sum_{i<j} n_ij log(exp theta^i + exp theta^j)

and sufficient statistic ``T_i = sum_j x_ij`` (total wins).  The expectation
coordinates ``eta_i = sum_j n_ij sigma(theta^i - theta^j)`` are the expected
win totals; the MLE satisfies ``eta = T`` but inverting eta (or pi) back to
theta has no closed form, which is why descent is run in theta.
"""

from __future__ import annotations

import csv

import numpy as np
from scipy.special import expit

from ..geometry import DuallyFlatModel, NewtonError, Objective, Point, solve_spd
from ..validation import as_square_matrix, as_vector, check_simplex_interior


class BradleyTerryModel(DuallyFlatModel):
    """Bradley-Terry family for a fixed match-count matrix.

    ``match_counts`` is an N x N symmetric nonnegative integer matrix with a
    zero diagonal; the model dimension is N - 1 and the theta-domain is all
    of R^(N-1).
    """

    def __init__(self, match_counts):
        n = as_square_matrix(np.asarray(match_counts), "match_counts")
        if n.shape[0] < 2:
            raise ValueError("need at least two players")
        if np.any(n < 0) or np.any(n != np.round(n)):
            raise ValueError("match counts must be nonnegative integers")
        if np.any(n != n.T):
            raise ValueError("match counts must be symmetric")
        if np.any(np.diag(n) != 0):
            raise ValueError("players do not play themselves (diagonal must be zero)")
        self.match_counts = n.astype(float)
        self.n_players = n.shape[0]
        self.dim = self.n_players - 1

    def _full_theta(self, theta) -> np.ndarray:
        theta = as_vector(theta, self.dim, "theta")
        return np.append(theta, 0.0)

    def psi(self, theta) -> float:
        full = self._full_theta(theta)
        pair_lse = np.logaddexp(full[:, None], full[None, :])
        iu = np.triu_indices(self.n_players, k=1)
        return float(self.match_counts[iu] @ pair_lse[iu])

    def expected_wins(self, theta) -> np.ndarray:
        """Expected win totals for all N players at the given strengths."""
        full = self._full_theta(theta)
        win_prob = expit(full[:, None] - full[None, :])
        return (self.match_counts * win_prob).sum(axis=1)

    def eta_from_theta(self, theta, warm_start=None) -> np.ndarray:
        return self.expected_wins(theta)[:-1]

    def metric_theta(self, theta) -> np.ndarray:
        full = self._full_theta(theta)
        win_prob = expit(full[:, None] - full[None, :])
        weight = self.match_counts * win_prob * (1.0 - win_prob)
        hess = np.diag(weight.sum(axis=1)) - weight
        return hess[:-1, :-1]

    def theta_from_eta(self, eta, warm_start=None) -> np.ndarray:
        """Newton solve of ``grad psi(theta) = eta``, damped on the residual norm."""
        eta = as_vector(eta, self.dim, "eta")
        theta = np.zeros(self.dim) if warm_start is None else as_vector(warm_start, self.dim, "warm_start")
        residual = self.eta_from_theta(theta) - eta
        norm = np.linalg.norm(residual)
        for _ in range(100):
            if np.max(np.abs(residual)) < 1e-10:
                return theta
            step = -solve_spd(self.metric_theta(theta), residual)
            scale = 1.0
            for _ in range(60):
                candidate = theta + scale * step
                cand_residual = self.eta_from_theta(candidate) - eta
                cand_norm = np.linalg.norm(cand_residual)
                if np.isfinite(cand_norm) and cand_norm < norm:
                    break
                scale *= 0.5
            else:
                raise NewtonError("eta inversion could not make progress")
            theta, residual, norm = candidate, cand_residual, cand_norm
        raise NewtonError("eta inversion did not converge (is eta inside the win polytope?)")

    def theta_in_domain(self, theta) -> bool:
        theta = np.asarray(theta, dtype=float)
        return theta.shape == (self.dim,) and bool(np.all(np.isfinite(theta)))

    def eta_in_domain(self, eta) -> bool:
        # Necessary box conditions only; the exact eta-image is the interior
        # of the expected-wins polytope, which is not characterized here.
        eta = np.asarray(eta, dtype=float)
        if eta.shape != (self.dim,) or not np.all(np.isfinite(eta)):
            return False
        totals = self.match_counts.sum(axis=1)[:-1]
        return bool(np.all(eta > 0) and np.all(eta < totals))

    def pi_from_theta(self, theta) -> np.ndarray:
        """Normalized strengths of all N players (overflow-safe softmax)."""
        full = self._full_theta(theta)
        full -= full.max()
        expd = np.exp(full)
        return expd / expd.sum()

    def theta_from_pi(self, pi) -> np.ndarray:
        pi = check_simplex_interior(np.asarray(pi, dtype=float), "pi")
        return np.log(pi[:-1]) - np.log(pi[-1])


class BTObservation:
    """Observed win matrix ``x_ij`` consistent with a model's match counts."""

    def __init__(self, model: BradleyTerryModel, wins):
        x = as_square_matrix(np.asarray(wins), "wins")
        if x.shape[0] != model.n_players:
            raise ValueError("wins matrix does not match the player count")
        if np.any(x < 0) or np.any(x != np.round(x)):
            raise ValueError("win counts must be nonnegative integers")
        if np.any(np.diag(x) != 0):
            raise ValueError("diagonal win counts must be zero")
        if np.any(x + x.T != model.match_counts):
            raise ValueError("wins and losses must add up to the match counts")
        self.wins = x.astype(float)
        self.totals = self.wins.sum(axis=1)


class BradleyTerryNLL(Objective):
    """Negative log-likelihood of a win matrix (binomial constants dropped).

    ``value = psi(theta) - <theta, T[:-1]>`` with theta-gradient
    ``eta(theta) - T[:-1]``; the eta-gradient derived through the metric is
    the natural-gradient direction used by the e-geodesic update.
    """

    def __init__(self, model: BradleyTerryModel, observation: BTObservation):
        super().__init__(model)
        self.observation = observation

    def value(self, point: Point) -> float:
        theta = point.theta
        return float(self.model.psi(theta) - theta @ self.observation.totals[:-1])

    def grad_theta(self, point: Point) -> np.ndarray:
        return point.eta - self.observation.totals[:-1]

    def grad_pi(self, point: Point) -> np.ndarray:
        """Stop-rule gradient in the strength coordinates pi_1..pi_(N-1)."""
        pi = self.model.pi_from_theta(point.theta)
        return nll_grad_pi(self.model, self.observation, pi)


def nll_grad_pi_full(model: BradleyTerryModel, observation: BTObservation, pi) -> np.ndarray:
    """NLL gradient treating all N strengths as free coordinates.

    ``d/d pi_i = -T_i / pi_i + sum_{j != i} n_ij / (pi_i + pi_j)``; this is
    the Euclidean simplex gradient the exponentiated-gradient update uses.
    """
    pi = check_simplex_interior(np.asarray(pi, dtype=float), "pi")
    pair_sum = pi[:, None] + pi[None, :]
    ratio = model.match_counts / pair_sum
    return -observation.totals / pi + ratio.sum(axis=1)


def nll_grad_pi(model: BradleyTerryModel, observation: BTObservation, pi) -> np.ndarray:
    """NLL gradient in pi_1..pi_(N-1) with pi_N eliminated by the sum constraint."""
    full = nll_grad_pi_full(model, observation, pi)
    return full[:-1] - full[-1]


def mm_step(model: BradleyTerryModel, observation: BTObservation, pi) -> np.ndarray:
    """One minorize-maximize update of the strengths, then renormalize.

    ``pi~_i = T_i / sum_{j != i} n_ij / (pi_i + pi_j)``.  A player with no
    wins is sent to the simplex boundary, which the caller must reject.
    """
    pi = check_simplex_interior(np.asarray(pi, dtype=float), "pi")
    pair_sum = pi[:, None] + pi[None, :]
    denom = (model.match_counts / pair_sum).sum(axis=1)
    unnormalized = observation.totals / denom
    return unnormalized / unnormalized.sum()


def load_matches(path) -> tuple[BradleyTerryModel, BTObservation]:
    """Read match results from a CSV of ``i,j,x_ij,x_ji`` rows (0-based, header required)."""
    rows = []
    with open(path, newline="") as handle:
        reader = csv.reader(handle)
        header = next(reader, None)
        if header is None or len(header) < 4:
            raise ValueError("expected a header row i,j,x_ij,x_ji")
        for row in reader:
            if not row:
                continue
            i, j, wins_ij, wins_ji = (int(cell) for cell in row[:4])
            rows.append((i, j, wins_ij, wins_ji))
    if not rows:
        raise ValueError("no match rows found")
    n_players = 1 + max(max(i, j) for i, j, _, _ in rows)
    x = np.zeros((n_players, n_players))
    for i, j, wins_ij, wins_ji in rows:
        if i == j:
            raise ValueError("self-matches are not allowed")
        x[i, j] += wins_ij
        x[j, i] += wins_ji
    model = BradleyTerryModel(x + x.T)
    return model, BTObservation(model, x)
