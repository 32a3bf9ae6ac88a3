"""Concrete dually flat families and their statistical objectives."""

from .bradley_terry import (
    BradleyTerryModel,
    BradleyTerryNLL,
    BTObservation,
    load_matches,
    mm_step,
    nll_grad_pi,
    nll_grad_pi_full,
)
from .categorical import CategoricalModel, CategoricalNLL, frequencies
from .diag_gaussian import DiagGaussianModel
from .mixture import MixtureModel, MixtureNLL, load_components, nll_grad_weights, overlapping_windows_mixture

__all__ = [
    "BradleyTerryModel",
    "BradleyTerryNLL",
    "BTObservation",
    "CategoricalModel",
    "CategoricalNLL",
    "DiagGaussianModel",
    "MixtureModel",
    "MixtureNLL",
    "frequencies",
    "load_components",
    "load_matches",
    "mm_step",
    "nll_grad_pi",
    "nll_grad_pi_full",
    "nll_grad_weights",
    "overlapping_windows_mixture",
]
