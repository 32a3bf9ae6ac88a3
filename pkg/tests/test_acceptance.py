"""Acceptance suite: one test per criterion, each printing a PASS line.

Stochastic criteria pin a master seed; the reference values each band is
checked against are stated inline.  Run directly with

    pytest tests/test_acceptance.py -v -s
"""

import time

import numpy as np
import pytest

from dualflat.checks import run_checks
from dualflat.geometry import BregmanObjective, DualBregmanObjective, Point, m_geodesic_step
from dualflat.models.categorical import CategoricalModel, CategoricalNLL
from dualflat.optimizers import DescentConfig, StopRule, run_geodesic_descent
from dualflat.experiments import run_bradley_terry, run_categorical_kl, run_mixture_mle, run_vi_mlr


def _report(number, name, elapsed, limit):
    assert elapsed < limit, f"criterion {number} took {elapsed:.2f}s (limit {limit}s)"
    print(f"ACCEPTANCE {number} {name}: PASS ({elapsed:.2f}s)")


def test_criterion_1_one_step_exact():
    start_time = time.perf_counter()
    model = CategoricalModel(3)
    rng = np.random.default_rng(0)
    start_eta = np.full(2, 1 / 3)
    for _ in range(100):
        raw = rng.random(3)
        target = Point.from_eta(model, (raw / raw.sum())[:2])
        stop = StopRule("distance_to_target_eta", 1e-5, target_eta=target.eta)
        start = Point.from_eta(model, start_eta)
        for objective, connection in ((BregmanObjective(model, target), "m_geodesic"),
                                      (DualBregmanObjective(model, target), "e_geodesic")):
            trace = run_geodesic_descent(model, objective, start,
                                         DescentConfig(connection, stop, step_size=1.0))
            assert trace.outcome == "converged"
            assert trace.iterations == 1
            landing = np.linalg.norm(trace.final_point.eta - target.eta)
            assert landing < 1e-10
    _report(1, "one-step convergence suite (100 targets, both connections)",
            time.perf_counter() - start_time, 1.0)


def test_criterion_2_single_step_mle():
    start_time = time.perf_counter()
    rng = np.random.default_rng(1)
    checked = 0
    while checked < 50:
        n_categories = int(rng.integers(2, 11))
        n_obs = int(rng.integers(10, 10_001))
        counts = rng.multinomial(n_obs, np.full(n_categories, 1.0 / n_categories))
        if np.any(counts == 0):
            continue  # frequency MLE would sit on the model boundary
        checked += 1
        model = CategoricalModel(n_categories)
        freqs = counts / n_obs
        objective = CategoricalNLL(model, freqs, n_obs)
        raw = rng.random(n_categories) + 0.05
        start = Point.from_eta(model, (raw / raw.sum())[:-1])
        landed = m_geodesic_step(model, start.eta, objective.grad_theta(start), 1.0 / n_obs)
        assert np.max(np.abs(landed - freqs[:-1])) < 1e-12
    _report(2, "single-step MLE over 50 random categorical datasets",
            time.perf_counter() - start_time, 1.0)


def test_criterion_3_stochastic_iteration_bands():
    start_time = time.perf_counter()
    table = run_categorical_kl(trials=100, seed=0)
    cells = {(row[0], row[1]): row[2] for row in table.rows}
    # reference values 3.66 +- 1.06 and 3.84 +- 1.09 (band = mean +- ~0.6)
    assert 3.0 <= cells[("KL(q, p)", "e-geodesic")] <= 4.5
    assert 3.2 <= cells[("KL(p, q)", "m-geodesic")] <= 4.6
    assert cells[("KL(q, p)", "m-geodesic")] == 1.0
    assert cells[("KL(p, q)", "e-geodesic")] == 1.0
    _report(3, "mismatched-connection iteration bands (100 trials)",
            time.perf_counter() - start_time, 1.0)


def test_criterion_4_bradley_terry_small():
    start_time = time.perf_counter()
    fast = {row[0]: (row[2], row[3]) for row in run_bradley_terry("small", step_size=1.0).rows}
    slow = {row[0]: (row[2], row[3]) for row in run_bradley_terry("small", step_size=0.01).rows}
    assert fast["mm"] == (20, "converged")
    assert slow["mm"] == (20, "converged")
    assert abs(fast["e-geodesic"][0] - 4) <= 1
    assert fast["exponentiated-gradient"] == ("overflow", "overflow")
    assert abs(slow["exponentiated-gradient"][0] - 84) <= 2
    assert abs(slow["e-geodesic"][0] - 1468) <= 30
    _report(4, "Bradley-Terry small instance (20 / 84 / 1468 / 4 / overflow)",
            time.perf_counter() - start_time, 1.0)


def test_criterion_5_bradley_terry_large():
    start_time = time.perf_counter()
    table = run_bradley_terry("large", step_size=1.0, trials=100, seed=0)
    means = {row[0]: row[1] for row in table.rows}
    # reference values 46.31 +- 1.76 and 3.11 +- 0.31
    assert 43.0 <= means["mm"] <= 50.0
    assert 2.5 <= means["e-geodesic"] <= 3.7
    _report(5, "Bradley-Terry with 100 players over 100 instances",
            time.perf_counter() - start_time, 30.0)


# reference iteration counts: method -> counts at lr = (0.5, 1.0, 1.5) / N,
# plus the exponentiated-gradient sweep at (1.6 .. 2.1) / N
MIXTURE_EXPECTED = {
    (250, 250, 250, 250): {"expo": (89, 40, 24), "m-geodesic": (25, 5, 22), "e-geodesic": (27, 5, 23),
                           "expo_ext": (22, 20, 18, 17, 17, 20), "seed": 9},
    (400, 400, 100, 100): {"expo": (82, 37, 21), "m-geodesic": (27, 9, 49), "e-geodesic": (28, 9, 47),
                           "expo_ext": (19, 17, 16, 16, 19, 23), "seed": 104},
    (700, 100, 100, 100): {"expo": (92, 41, 23), "m-geodesic": (29, 8, 41), "e-geodesic": (29, 8, 39),
                           "expo_ext": (21, 19, 24, 31, 40, 57), "seed": 5},
}


def test_criterion_6_mixture_bands_and_ordering():
    start_time = time.perf_counter()
    grid = (0.5, 1.0, 1.5)
    sweep = (1.6, 1.7, 1.8, 1.9, 2.0, 2.1)
    for case, expected in MIXTURE_EXPECTED.items():
        table = run_mixture_mle(case=case, seed=expected["seed"])
        cells = {(row[0], row[1]): row[2] for row in table.rows}
        assert all(row[3] == "converged" for row in table.rows)
        for idx, mult in enumerate(grid):
            for method in ("m-geodesic", "e-geodesic"):
                assert abs(cells[(method, mult)] - expected[method][idx]) <= 3, (case, method, mult)
            reference = expected["expo"][idx]
            assert abs(cells[("exponentiated-gradient", mult)] - reference) <= 0.15 * reference
        for idx, mult in enumerate(sweep):
            reference = expected["expo_ext"][idx]
            assert abs(cells[("exponentiated-gradient", mult)] - reference) <= 0.15 * reference
        for method in ("m-geodesic", "e-geodesic"):
            assert cells[(method, 1.0)] < cells[(method, 0.5)], (case, method)
            assert cells[(method, 1.0)] < cells[(method, 1.5)], (case, method)
    _report(6, "mixture iteration bands, sweep, and lr = 1/N ordering",
            time.perf_counter() - start_time, 30.0)


def test_criterion_7_vi_accuracy_property():
    start_time = time.perf_counter()
    for lam in (0.01, 1.0, 100.0):
        table = run_vi_mlr(shape=(200, 5, 3), prior_precision=lam, step_size=1.0,
                           n_mc_samples=1000, trials=20, seed=0)
        test_means = {row[0]: row[3] for row in table.rows}
        assert test_means["e-geodesic"] > test_means["gradient"], lam
        assert test_means["e-geodesic"] > test_means["m-geodesic"], lam
        if lam == 1.0:
            assert test_means["e-geodesic"] >= 0.70
    _report(7, "single-iteration VI accuracy dominance (3 priors x 20 trials)",
            time.perf_counter() - start_time, 600.0)


def test_criterion_8_property_suites():
    start_time = time.perf_counter()
    report = run_checks(seed=0)
    failed = [r for r in report.results if not r.passed]
    assert report.all_passed, "\n".join(f"{r.name}: {r.detail}" for r in failed)
    _report(8, f"property suites ({len(report.results)} checks)",
            time.perf_counter() - start_time, 60.0)
