"""Geodesic descent on dually flat spaces.

Dual-coordinate geometry (potentials, Bregman divergence, e/m-geodesic
updates), concrete statistical families (categorical, finite mixture,
Bradley-Terry, diagonal Gaussian), descent loops with domain-constrained
step halving, variational inference for multinomial logistic regression,
and a seeded benchmark harness with a CLI.
"""

from .geometry import (
    BregmanObjective,
    DomainError,
    DualBregmanObjective,
    DuallyFlatModel,
    NewtonError,
    Objective,
    Point,
    bregman_divergence,
    dual_potential,
    e_geodesic_step,
    fd_gradient,
    m_geodesic_step,
    mirror_descent_step_numeric,
)
from .models import (
    BradleyTerryModel,
    BradleyTerryNLL,
    BTObservation,
    CategoricalModel,
    CategoricalNLL,
    DiagGaussianModel,
    MixtureModel,
    MixtureNLL,
    overlapping_windows_mixture,
)
from .optimizers import (
    DescentConfig,
    RunTrace,
    StopRule,
    exponentiated_gradient_step,
    run_euclidean_gd,
    run_exponentiated_gradient,
    run_geodesic_descent,
    run_mm,
)

__version__ = "0.1.0"

__all__ = [
    "BregmanObjective",
    "BradleyTerryModel",
    "BradleyTerryNLL",
    "BTObservation",
    "CategoricalModel",
    "CategoricalNLL",
    "DescentConfig",
    "DiagGaussianModel",
    "DomainError",
    "DualBregmanObjective",
    "DuallyFlatModel",
    "MixtureModel",
    "MixtureNLL",
    "NewtonError",
    "Objective",
    "Point",
    "RunTrace",
    "StopRule",
    "bregman_divergence",
    "dual_potential",
    "e_geodesic_step",
    "exponentiated_gradient_step",
    "fd_gradient",
    "m_geodesic_step",
    "mirror_descent_step_numeric",
    "overlapping_windows_mixture",
    "run_euclidean_gd",
    "run_exponentiated_gradient",
    "run_geodesic_descent",
    "run_mm",
]
