"""Seeded benchmark experiments producing machine-readable result tables.

Every runner derives per-trial RNG streams from (master_seed, trial_index)
via numpy's SeedSequence spawn keys, so enlarging the trial count never
reshuffles earlier trials, and identical configurations reproduce identical
tables byte for byte (wall time is kept out of the serialized payload).
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field

import numpy as np

from .geometry import BregmanObjective, DualBregmanObjective, NewtonError, Point
from .models.bradley_terry import (BradleyTerryModel, BradleyTerryNLL, BTObservation,
                                   nll_grad_pi, nll_grad_pi_full)
from .models.categorical import CategoricalModel
from .models.mixture import MixtureNLL, nll_grad_weights, overlapping_windows_mixture
from .optimizers import DescentConfig, StopRule, run_exponentiated_gradient, run_geodesic_descent, run_mm
from .datagen import GenConfig, generate
from .varinf import MCConfig, VIState, accuracy, split_train_test, vi_single_iteration

__all__ = [
    "ExperimentSpec",
    "ResultTable",
    "run_experiment",
    "run_categorical_kl",
    "run_mixture_mle",
    "run_bradley_terry",
    "run_vi_mlr",
    "trial_rng",
    "BT_SMALL_WINS",
]

#: Three-player win matrix used by the small deterministic benchmark.
BT_SMALL_WINS = np.array([[0, 7, 8], [3, 0, 5], [2, 5, 0]])

#: Sample allocations of the three mixture benchmark cases.
MIXTURE_CASES = ((250, 250, 250, 250), (400, 400, 100, 100), (700, 100, 100, 100))

_ALLOWED_PARAMS = {
    "categorical-kl": {"n_categories", "epsilon", "step_size"},
    "mixture-mle": {"case", "epsilon", "lr_multipliers", "expo_multipliers"},
    "bradley-terry": {"mode", "step_size", "epsilon", "n_players"},
    "vi-mlr": {"shape", "prior_precision", "step_size", "n_mc_samples", "n_pred_samples"},
    "checks": set(),
}


def trial_rng(master_seed: int, trial_index: int) -> np.random.Generator:
    """Independent per-trial stream derived from (master_seed, trial_index)."""
    return np.random.default_rng(np.random.SeedSequence(entropy=master_seed,
                                                        spawn_key=(trial_index,)))


@dataclass(frozen=True)
class ExperimentSpec:
    """A validated experiment request, as assembled by the CLI."""

    experiment: str
    parameters: dict = field(default_factory=dict)
    seed: int = 0
    trials: int | None = None
    output_path: str | None = None

    def __post_init__(self):
        if self.experiment not in _ALLOWED_PARAMS:
            raise ValueError(f"unknown experiment {self.experiment!r}")
        unknown = set(self.parameters) - _ALLOWED_PARAMS[self.experiment]
        if unknown:
            raise ValueError(f"unsupported parameters for {self.experiment}: {sorted(unknown)}")
        if self.trials is not None and self.trials < 1:
            raise ValueError("trials must be positive")


@dataclass
class ResultTable:
    """Rows of an experiment table plus the configuration that produced them.

    Standard deviations use the population formula (ddof=0); numbers are
    only rounded at markdown serialization, CSV keeps full precision.
    """

    title: str
    columns: list[str]
    rows: list[tuple]
    config: dict
    wall_time_s: float = 0.0

    def _cell_csv(self, cell) -> str:
        if isinstance(cell, float):
            return repr(cell)
        return str(cell)

    def to_csv(self) -> str:
        lines = [f"# title: {self.title}",
                 f"# config: {json.dumps(self.config, sort_keys=True)}",
                 ",".join(self.columns)]
        lines.extend(",".join(self._cell_csv(c) for c in row) for row in self.rows)
        return "\n".join(lines) + "\n"

    def _cell_md(self, cell) -> str:
        if isinstance(cell, float):
            return f"{cell:.3f}"
        return str(cell)

    def to_markdown(self) -> str:
        grid = [list(self.columns)] + [[self._cell_md(c) for c in row] for row in self.rows]
        widths = [max(len(r[i]) for r in grid) for i in range(len(self.columns))]
        def fmt(row):
            return "| " + " | ".join(cell.ljust(w) for cell, w in zip(row, widths)) + " |"
        lines = [f"### {self.title}", "", fmt(grid[0]),
                 "|" + "|".join("-" * (w + 2) for w in widths) + "|"]
        lines.extend(fmt(r) for r in grid[1:])
        lines.append("")
        lines.append(f"config: `{json.dumps(self.config, sort_keys=True)}`")
        return "\n".join(lines) + "\n"

    def render(self, fmt: str) -> str:
        if fmt == "csv":
            return self.to_csv()
        if fmt == "md":
            return self.to_markdown()
        raise ValueError(f"unknown format {fmt!r}")


def run_categorical_kl(n_categories: int = 3, trials: int = 100, epsilon: float = 1e-5,
                       step_size: float = 1.0, seed: int = 0) -> ResultTable:
    """Iteration counts for minimizing both divergence orientations between
    categorical distributions with m- and e-geodesic updates.

    Per trial the target is built from ``n`` independent uniform draws,
    normalized; both objectives start at the uniform distribution and stop
    when the eta-distance to the target drops below ``epsilon``.
    """
    if n_categories < 2:
        raise ValueError("need at least two categories")
    start_time = time.perf_counter()
    model = CategoricalModel(n_categories)
    start_eta = np.full(model.dim, 1.0 / n_categories)
    combos = [("KL(q, p)", "m_geodesic"), ("KL(q, p)", "e_geodesic"),
              ("KL(p, q)", "m_geodesic"), ("KL(p, q)", "e_geodesic")]
    counts = {combo: [] for combo in combos}
    for trial in range(trials):
        rng = trial_rng(seed, trial)
        raw = rng.random(n_categories)
        target = Point.from_eta(model, (raw / raw.sum())[:-1])
        start = Point.from_eta(model, start_eta)
        objectives = {"KL(q, p)": BregmanObjective(model, target),
                      "KL(p, q)": DualBregmanObjective(model, target)}
        stop = StopRule("distance_to_target_eta", epsilon, target_eta=target.eta)
        for name, connection in combos:
            cfg = DescentConfig(connection, stop, step_size=step_size)
            trace = run_geodesic_descent(model, objectives[name], start, cfg)
            if trace.outcome != "converged":
                raise RuntimeError(f"{name}/{connection} failed to converge: {trace.outcome}")
            counts[(name, connection)].append(trace.iterations)
    rows = [(name, connection.replace("_", "-"),
             float(np.mean(counts[(name, connection)])),
             float(np.std(counts[(name, connection)])))
            for name, connection in combos]
    config = {"experiment": "categorical-kl", "n_categories": n_categories, "trials": trials,
              "epsilon": epsilon, "step_size": step_size, "seed": seed}
    return ResultTable("Iterations to minimize categorical divergences (q = target, p = iterate)",
                       ["objective", "connection", "mean_iterations", "std_iterations"],
                       rows, config, time.perf_counter() - start_time)


def _mixture_eta_grad_stat(model, freqs, n_obs):
    def stat(weights):
        full = nll_grad_weights(model, freqs, n_obs, weights)
        return float(np.linalg.norm(full[:-1] - full[-1]))
    return stat


def run_mixture_mle(case=(250, 250, 250, 250), lr_multipliers=(0.5, 1.0, 1.5),
                    expo_multipliers=(1.6, 1.7, 1.8, 1.9, 2.0, 2.1),
                    epsilon: float = 1e-5, seed: int = 0) -> ResultTable:
    """Iteration counts for mixture-weight MLE on the benchmark instance.

    ``case`` allocates the sample size over the component distributions; one
    dataset is drawn per call.  Geodesic methods and the exponentiated
    gradient run at ``lr = multiplier / N``; ``expo_multipliers`` extends the
    exponentiated-gradient sweep.  All methods start at uniform weights and
    stop when the eta-gradient norm of the negative log-likelihood drops
    below ``epsilon``.
    """
    model = overlapping_windows_mixture()
    if len(case) != model.n_components:
        raise ValueError(f"case must allocate samples to {model.n_components} components")
    if any(c < 0 for c in case) or sum(case) <= 0:
        raise ValueError("case counts must be nonnegative with a positive total")
    start_time = time.perf_counter()
    n_obs = int(sum(case))
    rng = np.random.default_rng(np.random.SeedSequence(entropy=seed))
    counts = np.zeros(model.omega_size)
    for component, n_i in enumerate(case):
        counts += rng.multinomial(int(n_i), model.components[component])
    freqs = counts / n_obs

    objective = MixtureNLL(model, freqs, n_obs)
    start = Point.from_eta(model, model.uniform_weights())
    stop = StopRule("grad_norm_eta", epsilon)
    stat = _mixture_eta_grad_stat(model, freqs, n_obs)
    uniform_full = np.full(model.n_components, 1.0 / model.n_components)

    rows = []
    for mult in lr_multipliers:
        lr = mult / n_obs
        trace = run_exponentiated_gradient(lambda w: nll_grad_weights(model, freqs, n_obs, w),
                                           stat, uniform_full, lr, epsilon)
        rows.append(("exponentiated-gradient", float(mult), trace.iterations, trace.outcome))
    for connection in ("m_geodesic", "e_geodesic"):
        for mult in lr_multipliers:
            cfg = DescentConfig(connection, stop, step_size=mult / n_obs)
            try:
                trace = run_geodesic_descent(model, objective, start, cfg)
                rows.append((connection.replace("_", "-"), float(mult), trace.iterations, trace.outcome))
            except NewtonError:
                rows.append((connection.replace("_", "-"), float(mult), -1, "newton_failure"))
    for mult in expo_multipliers:
        lr = mult / n_obs
        trace = run_exponentiated_gradient(lambda w: nll_grad_weights(model, freqs, n_obs, w),
                                           stat, uniform_full, lr, epsilon)
        rows.append(("exponentiated-gradient", float(mult), trace.iterations, trace.outcome))

    config = {"experiment": "mixture-mle", "case": list(int(c) for c in case),
              "lr_multipliers": [float(m) for m in lr_multipliers],
              "expo_multipliers": [float(m) for m in expo_multipliers],
              "epsilon": epsilon, "seed": seed}
    return ResultTable(f"Mixture MLE iterations, allocation {tuple(int(c) for c in case)}",
                       ["method", "lr_multiplier", "iterations", "outcome"],
                       rows, config, time.perf_counter() - start_time)


def _bt_random_instance(rng: np.random.Generator, n_players: int):
    iu = np.triu_indices(n_players, k=1)
    match_counts = rng.integers(1, 1001, size=iu[0].size)
    wins_upper = rng.integers(0, match_counts + 1)
    n = np.zeros((n_players, n_players), dtype=int)
    x = np.zeros((n_players, n_players), dtype=int)
    n[iu] = match_counts
    n += n.T
    x[iu] = wins_upper
    x[(iu[1], iu[0])] = match_counts - wins_upper
    return n, x


def run_bradley_terry(mode: str = "small", step_size: float = 1.0, epsilon: float = 1e-5,
                      trials: int = 100, seed: int = 0, n_players: int = 100) -> ResultTable:
    """Bradley-Terry MLE iteration counts.

    ``small`` runs the fixed three-player benchmark with the MM algorithm,
    the exponentiated gradient, and the e-geodesic method at the given step
    size (overflow is reported as a cell value, not an error).  ``large``
    draws ``trials`` random instances with ``n_players`` players, match
    counts uniform on {1..1000} and wins uniform given the counts, and
    reports mean/std iterations for MM and the e-geodesic method.
    """
    start_time = time.perf_counter()
    if mode == "small":
        model = BradleyTerryModel(BT_SMALL_WINS + BT_SMALL_WINS.T)
        obs = BTObservation(model, BT_SMALL_WINS)
        rows = []
        mm_trace = run_mm(model, obs, epsilon=epsilon)
        rows.append(("mm", "", mm_trace.iterations, mm_trace.outcome))
        pi0 = np.full(model.n_players, 1.0 / model.n_players)
        expo_trace = run_exponentiated_gradient(
            lambda p: nll_grad_pi_full(model, obs, p),
            lambda p: float(np.linalg.norm(nll_grad_pi(model, obs, p))),
            pi0, step_size, epsilon)
        expo_cell = expo_trace.iterations if expo_trace.outcome == "converged" else expo_trace.outcome
        rows.append(("exponentiated-gradient", float(step_size), expo_cell, expo_trace.outcome))
        nll = BradleyTerryNLL(model, obs)
        cfg = DescentConfig("e_geodesic", StopRule("grad_norm_pi", epsilon), step_size=step_size)
        trace = run_geodesic_descent(model, nll, Point.from_theta(model, np.zeros(model.dim)), cfg)
        rows.append(("e-geodesic", float(step_size), trace.iterations, trace.outcome))
        config = {"experiment": "bradley-terry", "mode": mode, "step_size": step_size,
                  "epsilon": epsilon, "seed": seed}
        return ResultTable(f"Bradley-Terry small instance, lr = {step_size}",
                           ["method", "step_size", "iterations", "outcome"],
                           rows, config, time.perf_counter() - start_time)

    if mode != "large":
        raise ValueError("mode must be 'small' or 'large'")
    mm_counts, egeo_counts = [], []
    for trial in range(trials):
        rng = trial_rng(seed, trial)
        n, x = _bt_random_instance(rng, n_players)
        model = BradleyTerryModel(n)
        obs = BTObservation(model, x)
        mm_counts.append(run_mm(model, obs, epsilon=epsilon).iterations)
        nll = BradleyTerryNLL(model, obs)
        cfg = DescentConfig("e_geodesic", StopRule("grad_norm_pi", epsilon), step_size=step_size)
        trace = run_geodesic_descent(model, nll, Point.from_theta(model, np.zeros(model.dim)), cfg)
        if trace.outcome != "converged":
            raise RuntimeError(f"e-geodesic failed on trial {trial}: {trace.outcome}")
        egeo_counts.append(trace.iterations)
    rows = [("mm", float(np.mean(mm_counts)), float(np.std(mm_counts))),
            ("e-geodesic", float(np.mean(egeo_counts)), float(np.std(egeo_counts)))]
    config = {"experiment": "bradley-terry", "mode": mode, "n_players": n_players,
              "step_size": step_size, "epsilon": epsilon, "trials": trials, "seed": seed}
    return ResultTable(f"Bradley-Terry, {n_players} players, lr = {step_size}, {trials} instances",
                       ["method", "mean_iterations", "std_iterations"],
                       rows, config, time.perf_counter() - start_time)


def run_vi_mlr(shape=(200, 5, 3), prior_precision: float = 1.0, step_size: float = 1.0,
               n_mc_samples: int = 1000, n_pred_samples: int = 10, trials: int = 20,
               seed: int = 0) -> ResultTable:
    """Single-iteration variational inference accuracy comparison.

    Per trial: generate a dataset of the given (N, M, D) shape, hold out 30%
    as test data, draw one standard-normal (mu, rho) initialization, run one
    iteration of each method from that shared state with shared Monte-Carlo
    noise, and score train/test accuracy with shared prediction draws.
    """
    n_samples, n_features, n_classes = (int(v) for v in shape)
    start_time = time.perf_counter()
    cfg = MCConfig(n_mc_samples=n_mc_samples, n_pred_samples=n_pred_samples,
                   prior_precision=prior_precision, seed=seed)
    methods = ("gradient", "e_geodesic", "m_geodesic")
    scores = {m: {"train": [], "test": []} for m in methods}
    failures = {m: 0 for m in methods}
    n_weights = n_features * n_classes
    for trial in range(trials):
        rng = trial_rng(seed, trial)
        data_seed = int(rng.integers(2 ** 63))
        full = generate(GenConfig(n_samples, n_features, n_classes, seed=data_seed))
        train, test = split_train_test(full, 0.3, rng)
        state = VIState.from_murho(rng.standard_normal(n_weights), rng.standard_normal(n_weights))
        noise = rng.standard_normal((n_mc_samples, n_weights))
        pred_noise = rng.standard_normal((n_pred_samples, n_weights))
        for method in methods:
            try:
                updated = vi_single_iteration(train, state, method, step_size, cfg, noise)
            except Exception:
                failures[method] += 1
                continue
            scores[method]["train"].append(accuracy(train, updated, noise=pred_noise))
            scores[method]["test"].append(accuracy(test, updated, noise=pred_noise))
    rows = []
    for method in methods:
        train_acc = scores[method]["train"]
        test_acc = scores[method]["test"]
        if train_acc:
            rows.append((method.replace("_", "-"), float(np.mean(train_acc)), float(np.std(train_acc)),
                         float(np.mean(test_acc)), float(np.std(test_acc)), failures[method]))
        else:
            rows.append((method.replace("_", "-"), "", "", "", "", failures[method]))
    config = {"experiment": "vi-mlr", "shape": [n_samples, n_features, n_classes],
              "prior_precision": prior_precision, "step_size": step_size,
              "n_mc_samples": n_mc_samples, "n_pred_samples": n_pred_samples,
              "trials": trials, "seed": seed}
    return ResultTable(f"Single-iteration VI accuracy, (N, M, D) = {tuple(shape)}, "
                       f"lambda = {prior_precision}, lr = {step_size}",
                       ["method", "train_mean", "train_std", "test_mean", "test_std", "failed_trials"],
                       rows, config, time.perf_counter() - start_time)


def run_experiment(spec: ExperimentSpec) -> ResultTable:
    """Dispatch a validated spec to its runner."""
    params = dict(spec.parameters)
    if spec.experiment == "categorical-kl":
        return run_categorical_kl(seed=spec.seed, trials=spec.trials or 100, **params)
    if spec.experiment == "mixture-mle":
        return run_mixture_mle(seed=spec.seed, **params)
    if spec.experiment == "bradley-terry":
        return run_bradley_terry(seed=spec.seed, trials=spec.trials or 100, **params)
    if spec.experiment == "vi-mlr":
        return run_vi_mlr(seed=spec.seed, trials=spec.trials or 20, **params)
    raise ValueError(f"no runner for {spec.experiment!r}")
