"""Small input-validation helpers shared across the package."""

from __future__ import annotations

import numpy as np

#: Absolute margin used by all strict domain predicates.  Points closer than
#: this to a domain boundary are treated as outside so that logarithms and
#: divisions stay finite.
DOMAIN_MARGIN = 1e-12


def as_vector(x, dim: int | None = None, name: str = "value") -> np.ndarray:
    """Coerce ``x`` to a finite 1-D float64 array, optionally of length ``dim``."""
    arr = np.asarray(x, dtype=float)
    if arr.ndim != 1:
        raise ValueError(f"{name} must be one-dimensional, got shape {arr.shape}")
    if dim is not None and arr.shape[0] != dim:
        raise ValueError(f"{name} must have length {dim}, got {arr.shape[0]}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite entries")
    return arr


def as_square_matrix(x, name: str = "matrix") -> np.ndarray:
    arr = np.asarray(x)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise ValueError(f"{name} must be a square matrix, got shape {arr.shape}")
    return arr


def check_positive(value: float, name: str = "value", allow_zero: bool = False) -> float:
    value = float(value)
    if not np.isfinite(value):
        raise ValueError(f"{name} must be finite")
    if allow_zero:
        if value < 0:
            raise ValueError(f"{name} must be nonnegative, got {value}")
    elif value <= 0:
        raise ValueError(f"{name} must be positive, got {value}")
    return value


def check_simplex_interior(weights: np.ndarray, name: str = "weights",
                           margin: float = 0.0) -> np.ndarray:
    """Validate a full probability vector lying strictly inside the simplex."""
    weights = as_vector(weights, name=name)
    if np.any(weights <= margin) or abs(weights.sum() - 1.0) > 1e-9:
        raise ValueError(f"{name} must be strictly positive and sum to one")
    return weights
