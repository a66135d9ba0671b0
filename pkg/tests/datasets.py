"""Small synthetic datasets shared by the learner and acceptance tests."""

import numpy as np


def blobs(seed=0, n=60, gap=2.0, spread=0.5):
    rng = np.random.default_rng(seed)
    X = np.vstack([rng.normal(-gap, spread, (n, 2)), rng.normal(gap, spread, (n, 2))])
    y = np.repeat([-1, 1], n)
    return X, y


def circles(seed=0, n=150):
    rng = np.random.default_rng(seed)
    r = np.concatenate([rng.uniform(0, 1, n), rng.uniform(2, 3, n)])
    theta = rng.uniform(0, 2 * np.pi, 2 * n)
    X = np.column_stack([r * np.cos(theta), r * np.sin(theta)])
    y = np.repeat([1, -1], n)
    return X, y


def diagonal_strip(seed=0, n=400, width=0.2):
    rng = np.random.default_rng(seed)
    X = rng.uniform(0, 1, (n, 2))
    y = np.where(np.abs(X[:, 0] - X[:, 1]) < width, 1, -1)
    return X, y


def rule_data(seed=0, n=1000, noise=0.05):
    """Labels from ``x1 > 5 and x2 = 1``; a fraction ``noise`` of labels flipped.

    Returns ``(X, noisy_labels, clean_labels)``.
    """
    rng = np.random.default_rng(seed)
    X = np.column_stack(
        [
            rng.uniform(0, 10, n).round(2),
            rng.integers(0, 2, n),
            rng.integers(0, 4, n),
            rng.normal(0, 1, n),
        ]
    ).astype(float)
    clean = np.where((X[:, 0] > 5) & (X[:, 1] == 1), 1, -1)
    flip = rng.random(n) < noise
    return X, np.where(flip, -clean, clean), clean


RULE_FEATURES = ("x1", "x2", "x3", "x4")
