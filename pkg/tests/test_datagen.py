"""Seeded synthetic-data generator."""

import numpy as np
import pytest

from dualflat.datagen import GenConfig, generate, generate_with_details


def test_block_sizes():
    _, details = generate_with_details(GenConfig(7, 3, 3, label_noise=0.0, seed=0))
    sizes = np.bincount(details.clean_labels, minlength=3)
    assert sorted(sizes.tolist(), reverse=True) == [3, 2, 2]


def test_config_validation():
    with pytest.raises(ValueError):
        GenConfig(10, 2, 5)  # 5 classes > 2^2 vertices
    with pytest.raises(ValueError):
        GenConfig(2, 3, 3)  # fewer samples than classes
    with pytest.raises(ValueError):
        GenConfig(10, 3, 3, label_noise=1.5)


def test_determinism():
    cfg = GenConfig(50, 4, 3, label_noise=0.0, seed=42)
    a, b = generate(cfg), generate(cfg)
    np.testing.assert_array_equal(a.X, b.X)
    np.testing.assert_array_equal(a.Y, b.Y)


def test_noise_only_touches_labels():
    clean = generate(GenConfig(200, 4, 3, label_noise=0.0, seed=7))
    noisy = generate(GenConfig(200, 4, 3, label_noise=0.5, seed=7))
    np.testing.assert_array_equal(clean.X, noisy.X)
    assert np.any(np.argmax(clean.Y, axis=1) != np.argmax(noisy.Y, axis=1))


def test_centers_are_distinct_cube_vertices():
    _, details = generate_with_details(GenConfig(20, 3, 8, seed=1))
    assert np.all(np.abs(details.centers) == 1.5)
    assert len({row.tobytes() for row in details.centers}) == 8


def test_transform_gram_is_psd():
    _, details = generate_with_details(GenConfig(20, 5, 3, seed=2))
    for transform in details.transforms:
        gram = transform.T @ transform
        np.testing.assert_allclose(gram, gram.T, atol=1e-12)
        assert np.min(np.linalg.eigvalsh(gram)) > -1e-9


def test_feature_permutation_is_bijection():
    _, details = generate_with_details(GenConfig(20, 6, 3, seed=3))
    assert sorted(details.feature_order.tolist()) == list(range(6))


def test_empirical_noise_rate():
    cfg = GenConfig(100_000, 4, 4, label_noise=0.03, seed=5)
    noisy, _ = generate_with_details(cfg)
    clean, _ = generate_with_details(GenConfig(100_000, 4, 4, label_noise=0.0, seed=5))
    changed = float(np.mean(np.argmax(noisy.Y, axis=1) != np.argmax(clean.Y, axis=1)))
    event_rate = changed * 4 / 3  # replacement may redraw the same class
    assert abs(event_rate - 0.03) <= 0.005


def test_class_covariance_matches_factor():
    cfg = GenConfig(50_000, 3, 2, label_noise=0.0, seed=6)
    dataset, details = generate_with_details(cfg)
    order = details.feature_order
    for j in range(2):
        rows = dataset.X[details.clean_labels == j]
        sample_cov = np.cov(rows, rowvar=False, ddof=0)
        target = (details.transforms[j].T @ details.transforms[j])[np.ix_(order, order)]
        rel = np.linalg.norm(sample_cov - target) / np.linalg.norm(target)
        assert rel < 0.1


def test_class_means_near_centers():
    cfg = GenConfig(30_000, 3, 3, label_noise=0.0, seed=8)
    dataset, details = generate_with_details(cfg)
    for j in range(3):
        rows = dataset.X[details.clean_labels == j]
        np.testing.assert_allclose(rows.mean(axis=0), details.centers[j][details.feature_order],
                                   atol=0.1)
