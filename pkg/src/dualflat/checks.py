"""Executable property suite: the library's invariants as named checks.

Each check returns (passed, detail).  ``run_checks`` executes the whole
suite over the standard model instances and aggregates a report; the CLI
``checks`` subcommand exits nonzero when anything fails.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .datagen import GenConfig, generate, generate_with_details
from .geometry import (BregmanObjective, DualBregmanObjective, Point, bregman_divergence,
                       fd_gradient, m_geodesic_step, e_geodesic_step, mirror_descent_step_numeric)
from .models.bradley_terry import BradleyTerryModel, BradleyTerryNLL, BTObservation, mm_step
from .models.categorical import CategoricalModel, CategoricalNLL
from .models.diag_gaussian import DiagGaussianModel
from .models.mixture import MixtureNLL, overlapping_windows_mixture
from .optimizers import exponentiated_gradient_step
from .varinf import MCConfig, VIState, mc_grad_dual, mc_grad_musigma, mc_grad_rho, mc_objective

__all__ = ["CheckResult", "CheckReport", "run_checks"]


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str


@dataclass(frozen=True)
class CheckReport:
    results: tuple

    @property
    def all_passed(self) -> bool:
        return all(r.passed for r in self.results)

    def render(self) -> str:
        lines = [f"{'PASS' if r.passed else 'FAIL'}  {r.name}: {r.detail}" for r in self.results]
        summary = "all checks passed" if self.all_passed else "CHECK FAILURES PRESENT"
        return "\n".join(lines + [summary]) + "\n"


def _standard_models(rng):
    """(name, model, eta sampler) triples for the contract suite."""
    cat = CategoricalModel(3)
    mix = overlapping_windows_mixture()
    bt = BradleyTerryModel(np.array([[0, 10, 10], [10, 0, 10], [10, 10, 0]]))
    gauss = DiagGaussianModel(2)

    def cat_eta():
        raw = rng.random(3) + 0.05
        return (raw / raw.sum())[:-1]

    def mix_eta():
        raw = rng.random(4) + 0.05
        return (raw / raw.sum())[:-1]

    def bt_eta():
        return bt.eta_from_theta(rng.normal(0.0, 1.0, bt.dim))

    def gauss_eta():
        mu = rng.uniform(-2.0, 2.0, gauss.d)
        sigma = rng.uniform(0.3, 2.0, gauss.d)
        return gauss.eta_from_musigma(mu, sigma)

    return [("categorical", cat, cat_eta), ("mixture", mix, mix_eta),
            ("bradley-terry", bt, bt_eta), ("diag-gaussian", gauss, gauss_eta)]


def check_legendre_roundtrip(model, eta_sampler, n_points: int = 100, tol: float = 1e-8):
    """eta -> theta -> eta returns to the start in the infinity norm."""
    worst = 0.0
    for _ in range(n_points):
        eta = eta_sampler()
        back = model.eta_from_theta(model.theta_from_eta(eta))
        worst = max(worst, float(np.max(np.abs(back - eta))))
    return worst < tol, f"max roundtrip error {worst:.3e} (tol {tol:.0e})"


def _fd_jacobian(fn, x, h=1e-6):
    rows = [fd_gradient(lambda v, i=i: fn(v)[i], x, h) for i in range(fn(x).size)]
    return np.vstack(rows)


def check_metric_hessian(model, eta_sampler, n_points: int = 5, rtol: float = 1e-4):
    """metric_theta equals the central-difference Jacobian of eta_from_theta."""
    worst = 0.0
    for _ in range(n_points):
        theta = model.theta_from_eta(eta_sampler())
        metric = model.metric_theta(theta)
        fd = _fd_jacobian(lambda th: model.eta_from_theta(th), theta)
        worst = max(worst, float(np.max(np.abs(fd - metric)) / (1.0 + np.max(np.abs(metric)))))
    return worst < rtol, f"max relative metric error {worst:.3e} (tol {rtol:.0e})"


def check_bregman_positivity(model, eta_sampler, n_pairs: int = 100):
    """B(r, q) >= 0 with equality iff the coordinates coincide (1e-12)."""
    for _ in range(n_pairs):
        r = Point.from_eta(model, eta_sampler())
        q = Point.from_eta(model, eta_sampler())
        div = bregman_divergence(model, r, q)
        same = np.max(np.abs(r.eta - q.eta)) < 1e-12
        scale = 1.0 + abs(model.psi(r.theta))
        if same:
            if abs(div) > 1e-12 * scale:
                return False, f"divergence {div:.3e} at coincident points"
        elif div <= 0:
            return False, f"nonpositive divergence {div:.3e} at distinct points"
        self_div = bregman_divergence(model, r, r)
        if abs(self_div) > 1e-12 * scale:
            return False, f"self-divergence {self_div:.3e} not zero"
    return True, f"positive on {n_pairs} random pairs, zero on the diagonal"


def check_one_step_divergence_min(model, eta_sampler, n_pairs: int = 20, tol: float = 1e-10):
    """One m-geodesic step with t=1 on B(., q) lands exactly on eta(q)."""
    worst = 0.0
    for _ in range(n_pairs):
        p = Point.from_eta(model, eta_sampler())
        q = Point.from_eta(model, eta_sampler())
        objective = BregmanObjective(model, q)
        landed = m_geodesic_step(model, p.eta, objective.grad_theta(p), 1.0)
        worst = max(worst, float(np.max(np.abs(landed - q.eta))))
    return worst < tol, f"max landing error {worst:.3e} (tol {tol:.0e})"


def check_dual_gradient_fd(objective, point: Point, rtol: float = 1e-4):
    """Both analytic gradients match central differences of the value."""
    model = objective.model
    gt = objective.grad_theta(point)
    ge = objective.grad_eta(point)
    fd_t = fd_gradient(lambda th: objective.value(Point.from_theta(model, th)), point.theta)
    fd_e = fd_gradient(lambda e: objective.value(Point.from_eta(model, e)), point.eta)
    err_t = float(np.max(np.abs(gt - fd_t) / (1.0 + np.abs(fd_t))))
    err_e = float(np.max(np.abs(ge - fd_e) / (1.0 + np.abs(fd_e))))
    worst = max(err_t, err_e)
    return worst < rtol, f"max relative gradient error {worst:.3e} (tol {rtol:.0e})"


def check_mirror_descent_equivalence(rng, n_cases: int = 50, tol: float = 1e-8):
    """The numeric mirror-descent argmin equals the mapped m-geodesic step."""
    model = CategoricalModel(3)
    worst = 0.0
    done = 0
    while done < n_cases:
        theta_k = rng.normal(0.0, 1.0, model.dim)
        grad = rng.normal(0.0, 1.0, model.dim)
        t = rng.uniform(0.05, 0.5)
        eta_step = m_geodesic_step(model, model.eta_from_theta(theta_k), grad, t)
        if not model.eta_in_domain(eta_step) or np.any(eta_step < 1e-6):
            continue  # resample: the argmin must stay interior
        done += 1
        oracle = mirror_descent_step_numeric(model, theta_k, grad, t)
        worst = max(worst, float(np.max(np.abs(oracle - model.theta_from_eta(eta_step)))))
    return worst < tol, f"max discrepancy {worst:.3e} over {n_cases} cases (tol {tol:.0e})"


def check_expo_egeodesic_equivalence(rng, n_cases: int = 50, tol: float = 1e-10):
    """The exponentiated-gradient step is the categorical e-geodesic step."""
    model = CategoricalModel(3)
    worst = 0.0
    for _ in range(n_cases):
        raw = rng.random(3) + 0.05
        weights = raw / raw.sum()
        grad_full = rng.normal(0.0, 2.0, 3)
        t = rng.uniform(0.0, 1.5)
        via_expo = exponentiated_gradient_step(weights, grad_full, t)
        theta = model.theta_from_eta(weights[:-1])
        stepped = e_geodesic_step(model, theta, grad_full[:-1] - grad_full[-1], t)
        via_geodesic = model.eta_from_theta(stepped)
        worst = max(worst, float(np.max(np.abs(via_expo[:-1] - via_geodesic))))
    return worst < tol, f"max eta discrepancy {worst:.3e} (tol {tol:.0e})"


def check_mm_fixed_point(tol: float = 1e-12):
    """The MM map leaves the maximum likelihood strengths fixed."""
    wins = np.array([[0, 7, 8], [3, 0, 5], [2, 5, 0]])
    model = BradleyTerryModel(wins + wins.T)
    obs = BTObservation(model, wins)
    pi = np.full(3, 1.0 / 3.0)
    for _ in range(300):
        pi = mm_step(model, obs, pi)
    drift = float(np.max(np.abs(mm_step(model, obs, pi) - pi)))
    return drift < tol, f"fixed-point drift {drift:.3e} (tol {tol:.0e})"


def check_categorical_mle_one_step(rng, n_datasets: int = 50, tol: float = 1e-12):
    """One m-geodesic step with t = 1/N reaches the empirical frequencies."""
    worst = 0.0
    for _ in range(n_datasets):
        n_categories = int(rng.integers(2, 11))
        n_obs = int(rng.integers(10, 10_001))
        model = CategoricalModel(n_categories)
        counts = rng.multinomial(n_obs, np.full(n_categories, 1.0 / n_categories))
        if np.any(counts == 0):
            continue  # boundary MLE lies outside the model
        freqs = counts / n_obs
        objective = CategoricalNLL(model, freqs, n_obs)
        raw = rng.random(n_categories) + 0.05
        start = Point.from_eta(model, (raw / raw.sum())[:-1])
        landed = m_geodesic_step(model, start.eta, objective.grad_theta(start), 1.0 / n_obs)
        worst = max(worst, float(np.max(np.abs(landed - freqs[:-1]))))
    return worst < tol, f"max distance to the frequency MLE {worst:.3e} (tol {tol:.0e})"


def check_mc_dual_gradient_fd(rng, rtol: float = 1e-3):
    """Monte-Carlo VI gradients match finite differences in every coordinate system."""
    data = generate(GenConfig(30, 3, 3, seed=int(rng.integers(2 ** 31))))
    n_weights = 9
    state = VIState.from_murho(rng.normal(0.0, 0.5, n_weights), rng.normal(0.0, 0.5, n_weights))
    cfg = MCConfig(n_mc_samples=8, prior_precision=2.0)
    noise = rng.standard_normal((8, n_weights))
    model = DiagGaussianModel(n_weights)

    grad_mu, grad_sigma = mc_grad_musigma(data, state, cfg, noise)
    _, grad_rho = mc_grad_rho(data, state, cfg, noise)
    grad_theta, grad_eta = mc_grad_dual(data, state, cfg, noise)
    theta = model.theta_from_musigma(state.mu, state.sigma)
    eta = model.eta_from_musigma(state.mu, state.sigma)

    pairs = [
        (grad_mu, fd_gradient(lambda m: mc_objective(data, VIState.from_musigma(m, state.sigma), cfg, noise), state.mu)),
        (grad_sigma, fd_gradient(lambda s: mc_objective(data, VIState.from_musigma(state.mu, s), cfg, noise), state.sigma)),
        (grad_rho, fd_gradient(lambda r: mc_objective(data, VIState.from_murho(state.mu, r), cfg, noise), state.rho)),
        (grad_theta, fd_gradient(lambda th: mc_objective(data, VIState.from_musigma(*model.musigma_from_theta(th)), cfg, noise), theta)),
        (grad_eta, fd_gradient(lambda e: mc_objective(data, VIState.from_musigma(*model.musigma_from_eta(e)), cfg, noise), eta)),
    ]
    worst = max(float(np.max(np.abs(a - b) / (1.0 + np.abs(b)))) for a, b in pairs)
    metric_err = float(np.max(np.abs(np.linalg.solve(model.metric_theta(theta), grad_theta) - grad_eta)))
    ok = worst < rtol and metric_err < 1e-8
    return ok, f"max fd error {worst:.3e} (tol {rtol:.0e}), metric identity error {metric_err:.3e}"


def check_vi_prior_convergence(rng, tol: float = 1e-3):
    """With no data the objective is minimized at mu = 0, sigma = lambda^-1/2.

    Uses per-coordinate standardized noise so the finite-sample stationary
    point coincides with the exact one, then runs plain gradient descent.
    """
    from .optimizers import run_euclidean_gd
    from .varinf import VIDataset

    n_weights, lam = 4, 1.0
    empty = VIDataset(np.zeros((0, 2)), np.zeros((0, 2)))
    cfg = MCConfig(n_mc_samples=64, prior_precision=lam)
    noise = rng.standard_normal((64, n_weights))
    noise = (noise - noise.mean(axis=0)) / noise.std(axis=0)

    def grad(packed):
        state = VIState.from_musigma(packed[:n_weights], packed[n_weights:])
        gm, gs = mc_grad_musigma(empty, state, cfg, noise)
        return np.concatenate([gm, gs])

    start = np.concatenate([rng.normal(0.0, 0.5, n_weights), rng.uniform(0.5, 2.0, n_weights)])
    trace = run_euclidean_gd(grad, start, 0.2, 500)
    final = trace.iterates[-1]
    target = np.concatenate([np.zeros(n_weights), np.full(n_weights, lam ** -0.5)])
    err = float(np.max(np.abs(final - target)))
    return err < tol, f"distance to the prior parameters {err:.3e} (tol {tol:.0e})"


def check_datagen_statistics(seed: int = 0):
    """Partition sizes, PSD class covariances, noise rate, feature bijection,
    and the empirical class covariance against its generating factor."""
    cfg = GenConfig(7, 3, 3, seed=seed)
    sizes = np.bincount(generate_with_details(cfg)[1].clean_labels, minlength=3)
    if sorted(sizes.tolist(), reverse=True) != [3, 2, 2]:
        return False, f"unexpected partition sizes {sizes.tolist()}"

    noisy_cfg = GenConfig(100_000, 4, 4, label_noise=0.03, seed=seed + 1)
    dataset, details = generate_with_details(noisy_cfg)
    if sorted(details.feature_order.tolist()) != list(range(4)):
        return False, "feature permutation is not a bijection"
    for transform in details.transforms:
        gram = transform.T @ transform
        if np.max(np.abs(gram - gram.T)) > 1e-12 or np.min(np.linalg.eigvalsh(gram)) < -1e-9:
            return False, "class covariance factor is not symmetric PSD"
    clean_cfg = GenConfig(100_000, 4, 4, label_noise=0.0, seed=seed + 1)
    clean, _ = generate_with_details(clean_cfg)
    changed = float(np.mean(np.argmax(dataset.Y, axis=1) != np.argmax(clean.Y, axis=1)))
    event_rate = changed * noisy_cfg.n_classes / (noisy_cfg.n_classes - 1)
    if abs(event_rate - 0.03) > 0.005:
        return False, f"estimated label-noise rate {event_rate:.4f} outside 0.03 +- 0.005"

    cov_cfg = GenConfig(50_000, 3, 2, label_noise=0.0, seed=seed + 2)
    dataset, details = generate_with_details(cov_cfg)
    order = details.feature_order
    worst = 0.0
    for j in range(cov_cfg.n_classes):
        rows = dataset.X[details.clean_labels == j]
        sample_cov = np.cov(rows, rowvar=False, ddof=0)
        target = (details.transforms[j].T @ details.transforms[j])[np.ix_(order, order)]
        worst = max(worst, float(np.linalg.norm(sample_cov - target) / np.linalg.norm(target)))
    if worst > 0.1:
        return False, f"class covariance Frobenius error {worst:.3f} exceeds 0.1"
    return True, f"noise rate {event_rate:.4f}, max covariance error {worst:.3f}"


def run_checks(seed: int = 0) -> CheckReport:
    """Execute the whole property suite over the standard instances."""
    rng = np.random.default_rng(seed)
    results = []

    def record(name, fn, *args, **kwargs):
        try:
            passed, detail = fn(*args, **kwargs)
        except Exception as exc:  # a crash is a failure, not an abort
            passed, detail = False, f"raised {type(exc).__name__}: {exc}"
        results.append(CheckResult(name, passed, detail))

    models = _standard_models(rng)
    for name, model, sampler in models:
        record(f"legendre_roundtrip[{name}]", check_legendre_roundtrip, model, sampler)
        record(f"metric_hessian[{name}]", check_metric_hessian, model, sampler)
        record(f"bregman_positivity[{name}]", check_bregman_positivity, model, sampler)
        record(f"one_step_divergence_min[{name}]", check_one_step_divergence_min, model, sampler)

    cat = CategoricalModel(3)
    raw = rng.random(3) + 0.2
    cat_eta = (raw / raw.sum())[:-1]
    cat_point = Point.from_eta(cat, cat_eta)
    freqs = np.array([0.5, 0.2, 0.3])
    record("dual_gradient_fd[categorical-nll]", check_dual_gradient_fd,
           CategoricalNLL(cat, freqs, 100), cat_point)
    raw = rng.random(3) + 0.2
    target = Point.from_eta(cat, (raw / raw.sum())[:-1])
    record("dual_gradient_fd[bregman]", check_dual_gradient_fd,
           BregmanObjective(cat, target), cat_point)
    record("dual_gradient_fd[dual-bregman]", check_dual_gradient_fd,
           DualBregmanObjective(cat, target), cat_point)

    mix = overlapping_windows_mixture()
    mix_counts = rng.multinomial(500, mix.density(mix.uniform_weights()))
    mix_obj = MixtureNLL(mix, mix_counts / 500, 500)
    raw = rng.random(4) + 0.2
    record("dual_gradient_fd[mixture-nll]", check_dual_gradient_fd,
           mix_obj, Point.from_eta(mix, (raw / raw.sum())[:-1]))

    wins = np.array([[0, 6, 4], [4, 0, 7], [6, 3, 0]])
    bt = BradleyTerryModel(wins + wins.T)
    record("dual_gradient_fd[bradley-terry-nll]", check_dual_gradient_fd,
           BradleyTerryNLL(bt, BTObservation(bt, wins)),
           Point.from_theta(bt, rng.normal(0.0, 0.5, 2)))

    record("mirror_descent_equivalence", check_mirror_descent_equivalence, rng)
    record("expo_egeodesic_equivalence", check_expo_egeodesic_equivalence, rng)
    record("mm_fixed_point", check_mm_fixed_point)
    record("categorical_mle_one_step", check_categorical_mle_one_step, rng)
    record("mc_dual_gradient_fd", check_mc_dual_gradient_fd, rng)
    record("vi_prior_convergence", check_vi_prior_convergence, rng)
    record("datagen_statistics", check_datagen_statistics, seed)
    return CheckReport(tuple(results))
