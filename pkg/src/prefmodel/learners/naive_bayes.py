"""Gaussian naive Bayes for labels in {-1, +1}, computed in log space."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from ..errors import DegenerateClassError

CLASSES = (-1, 1)
VAR_FLOOR = 1e-9
_LOG_2PI = np.log(2.0 * np.pi)


@dataclass(frozen=True)
class NBModel:
    log_priors: np.ndarray  # (2,), ordered as CLASSES
    means: np.ndarray  # (2, d)
    variances: np.ndarray  # (2, d)

    kind = "naive_bayes"

    @property
    def priors(self) -> np.ndarray:
        return np.exp(self.log_priors)

    def joint_log_likelihood(self, X) -> np.ndarray:
        """``log P(C) + sum_j log p(x_j | C)`` for each class, shape ``(n, 2)``."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        out = np.empty((X.shape[0], 2))
        for c in range(2):
            var = self.variances[c]
            log_norm = -0.5 * np.sum(_LOG_2PI + np.log(var))
            sq = ((X - self.means[c]) ** 2) / var
            out[:, c] = self.log_priors[c] + log_norm - 0.5 * sq.sum(axis=1)
        return out

    def posterior(self, X) -> np.ndarray:
        jll = self.joint_log_likelihood(X)
        return np.exp(jll - logsumexp(jll, axis=1, keepdims=True))

    def decision_function(self, X) -> np.ndarray:
        jll = self.joint_log_likelihood(X)
        return jll[:, 1] - jll[:, 0]

    def predict(self, X) -> np.ndarray:
        # equal posteriors resolve to -1
        return np.where(self.decision_function(X) > 0, 1, -1)

    def to_params(self) -> dict:
        return {
            "log_priors": self.log_priors.tolist(),
            "means": self.means.tolist(),
            "variances": self.variances.tolist(),
        }

    @classmethod
    def from_params(cls, params: dict) -> "NBModel":
        return cls(
            np.array(params["log_priors"], dtype=float),
            np.array(params["means"], dtype=float),
            np.array(params["variances"], dtype=float),
        )


def train_naive_bayes(X, y, var_floor: float = VAR_FLOOR) -> NBModel:
    """Fit class priors and per-class, per-feature Gaussians.

    Variances are maximum-likelihood estimates clipped below at ``var_floor``.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    y = np.asarray(y)
    counts = np.array([(y == c).sum() for c in CLASSES])
    if (counts == 0).any():
        raise DegenerateClassError(f"naive Bayes needs both classes, got counts {counts.tolist()}")
    means = np.vstack([X[y == c].mean(axis=0) for c in CLASSES])
    variances = np.vstack([X[y == c].var(axis=0) for c in CLASSES])
    variances = np.maximum(variances, var_floor)
    log_priors = np.log(counts / counts.sum())
    return NBModel(log_priors, means, variances)
