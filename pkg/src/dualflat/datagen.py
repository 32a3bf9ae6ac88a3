"""Synthetic classification data: Gaussian clusters at hypercube vertices.

Samples are split into D index blocks, one per class.  Class j draws from
N(c_j, A_j^T A_j) where c_j is a random vertex of the cube
[-half_width, half_width]^M and A_j has entries uniform on [-1, 1).  Labels
are flipped to a uniformly random one-hot with probability ``label_noise``,
then sample order is shuffled and one shared random permutation is applied
to the feature columns.

Draw order from the seeded generator (numpy PCG64) is fixed - centers, class
transforms, per-class normal variates, noise uniforms, replacement classes,
sample permutation, feature permutation - so runs with equal seeds and
different ``label_noise`` share every other random choice.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .varinf import VIDataset

__all__ = ["GenConfig", "GenDetails", "generate", "generate_with_details", "to_csv"]


@dataclass(frozen=True)
class GenConfig:
    n_samples: int
    n_features: int
    n_classes: int
    label_noise: float = 0.03
    cube_half_width: float = 1.5
    seed: int = 0

    def __post_init__(self):
        if self.n_features < 1 or self.n_classes < 2:
            raise ValueError("need at least one feature and two classes")
        if self.n_classes > 2 ** self.n_features:
            raise ValueError("not enough distinct hypercube vertices for the classes")
        if self.n_samples < self.n_classes:
            raise ValueError("need at least one sample per class")
        if not 0.0 <= self.label_noise <= 1.0:
            raise ValueError("label_noise must lie in [0, 1]")
        if self.cube_half_width <= 0:
            raise ValueError("cube_half_width must be positive")


@dataclass(frozen=True)
class GenDetails:
    """Generation internals, aligned with the returned (shuffled) row order."""

    centers: np.ndarray        # (D, M), original feature order
    transforms: np.ndarray     # (D, M, M), rows of A_j
    clean_labels: np.ndarray   # (N,) class index before label noise
    noise_mask: np.ndarray     # (N,) True where the replacement event fired
    feature_order: np.ndarray  # (M,) permutation applied to columns


def _block_sizes(n_samples: int, n_classes: int) -> list[int]:
    big, rem = divmod(n_samples, n_classes)
    return [big + 1 if j < rem else big for j in range(n_classes)]


def _distinct_vertices(rng: np.random.Generator, n_classes: int, n_features: int) -> np.ndarray:
    seen = set()
    vertices = []
    while len(vertices) < n_classes:
        candidate = rng.integers(0, 2, size=n_features)
        key = candidate.tobytes()
        if key not in seen:
            seen.add(key)
            vertices.append(candidate)
    return np.asarray(vertices)


def generate_with_details(cfg: GenConfig) -> tuple[VIDataset, GenDetails]:
    rng = np.random.default_rng(cfg.seed)
    N, M, D = cfg.n_samples, cfg.n_features, cfg.n_classes
    sizes = _block_sizes(N, D)

    centers = (2.0 * _distinct_vertices(rng, D, M) - 1.0) * cfg.cube_half_width
    transforms = rng.uniform(-1.0, 1.0, size=(D, M, M))

    X = np.empty((N, M))
    labels = np.empty(N, dtype=int)
    row = 0
    for j, size in enumerate(sizes):
        z = rng.standard_normal((size, M))
        X[row:row + size] = centers[j] + z @ transforms[j]
        labels[row:row + size] = j
        row += size

    noise_mask = rng.random(N) < cfg.label_noise
    replacements = rng.integers(0, D, size=N)
    noisy_labels = np.where(noise_mask, replacements, labels)

    order = rng.permutation(N)
    feature_order = rng.permutation(M)

    Y = np.zeros((N, D))
    Y[np.arange(N), noisy_labels] = 1.0
    dataset = VIDataset(X[order][:, feature_order], Y[order])
    details = GenDetails(centers=centers, transforms=transforms,
                         clean_labels=labels[order], noise_mask=noise_mask[order],
                         feature_order=feature_order)
    return dataset, details


def generate(cfg: GenConfig) -> VIDataset:
    return generate_with_details(cfg)[0]


def to_csv(dataset: VIDataset, path) -> None:
    """Write ``x0..x{M-1},y0..y{D-1}`` rows with a header."""
    header = [f"x{i}" for i in range(dataset.n_features)] + [f"y{j}" for j in range(dataset.n_classes)]
    table = np.hstack([dataset.X, dataset.Y])
    with open(path, "w", newline="") as handle:
        handle.write(",".join(header) + "\n")
        for row in table:
            handle.write(",".join(repr(float(cell)) for cell in row) + "\n")
