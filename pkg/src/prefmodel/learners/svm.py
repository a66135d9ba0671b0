"""RBF-kernel support vector classifier trained with SMO.

The dual

    min_a  1/2 a^T Q a - e^T a,   Q_ij = y_i y_j K(x_i, x_j)
    s.t.   0 <= a_i <= C,  y^T a = 0

is solved two coordinates at a time.  The working pair is the maximal
violating pair with second-order selection of the partner (Fan, Chen and
Lin, 2005), and the solver stops once the maximal KKT violation drops
below ``tol``.  Inputs are rescaled to [-1, 1] with the training min/max.
"""

from __future__ import annotations

import logging
from collections import OrderedDict
from dataclasses import dataclass, field

import numpy as np

from ..errors import ConvergenceError, DegenerateClassError, DomainError

logger = logging.getLogger(__name__)

TOL = 1e-3
MAX_PASSES = 100
_TAU = 1e-12
_FULL_KERNEL_LIMIT = 3000


@dataclass(frozen=True)
class MinMaxScaler:
    lo: np.ndarray
    hi: np.ndarray

    @classmethod
    def fit(cls, X) -> "MinMaxScaler":
        return cls(X.min(axis=0), X.max(axis=0))

    def transform(self, X) -> np.ndarray:
        span = self.hi - self.lo
        safe = np.where(span > 0, span, 1.0)
        Z = 2.0 * (X - self.lo) / safe - 1.0
        return np.where(span > 0, Z, 0.0)


def rbf_kernel(A, B, gamma: float) -> np.ndarray:
    sq = (A * A).sum(axis=1)[:, None] + (B * B).sum(axis=1)[None, :] - 2.0 * A @ B.T
    return np.exp(-gamma * np.maximum(sq, 0.0))


class _KernelRows:
    """Rows of K on demand: a full matrix for small n, an LRU row cache otherwise."""

    def __init__(self, X, gamma, cache_rows=512):
        self.X = X
        self.gamma = gamma
        self.sq = (X * X).sum(axis=1)
        self.full = rbf_kernel(X, X, gamma) if X.shape[0] <= _FULL_KERNEL_LIMIT else None
        self.cache = OrderedDict()
        self.cache_rows = cache_rows

    def row(self, i) -> np.ndarray:
        if self.full is not None:
            return self.full[i]
        hit = self.cache.get(i)
        if hit is not None:
            self.cache.move_to_end(i)
            return hit
        sq = self.sq + self.sq[i] - 2.0 * (self.X @ self.X[i])
        r = np.exp(-self.gamma * np.maximum(sq, 0.0))
        self.cache[i] = r
        if len(self.cache) > self.cache_rows:
            self.cache.popitem(last=False)
        return r


@dataclass(frozen=True)
class SVMModel:
    gamma: float
    C: float
    scaler: MinMaxScaler
    support_vectors: np.ndarray  # scaled inputs
    dual_coef: np.ndarray  # alpha_i * y_i
    alphas: np.ndarray
    support_indices: np.ndarray
    bias: float
    n_train: int
    iterations: int = field(default=0, compare=False)
    residual: float = field(default=0.0, compare=False)

    kind = "svm"

    def _decision_scaled(self, Z) -> np.ndarray:
        if len(self.dual_coef) == 0:
            return np.full(Z.shape[0], self.bias)
        return rbf_kernel(Z, self.support_vectors, self.gamma) @ self.dual_coef + self.bias

    def decision_function(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        return self._decision_scaled(self.scaler.transform(X))

    def predict(self, X) -> np.ndarray:
        # a zero decision value resolves to -1
        return np.where(self.decision_function(X) > 0, 1, -1)

    def full_alphas(self) -> np.ndarray:
        a = np.zeros(self.n_train)
        a[self.support_indices] = self.alphas
        return a

    def to_params(self) -> dict:
        return {
            "gamma": self.gamma,
            "C": self.C,
            "scaler": {"lo": self.scaler.lo.tolist(), "hi": self.scaler.hi.tolist()},
            "support_vectors": self.support_vectors.tolist(),
            "dual_coef": self.dual_coef.tolist(),
            "alphas": self.alphas.tolist(),
            "support_indices": self.support_indices.tolist(),
            "bias": self.bias,
            "n_train": self.n_train,
        }

    @classmethod
    def from_params(cls, p: dict) -> "SVMModel":
        d = len(p["scaler"]["lo"])
        return cls(
            gamma=float(p["gamma"]),
            C=float(p["C"]),
            scaler=MinMaxScaler(np.array(p["scaler"]["lo"], dtype=float), np.array(p["scaler"]["hi"], dtype=float)),
            support_vectors=np.array(p["support_vectors"], dtype=float).reshape(-1, d),
            dual_coef=np.array(p["dual_coef"], dtype=float),
            alphas=np.array(p["alphas"], dtype=float),
            support_indices=np.array(p["support_indices"], dtype=int),
            bias=float(p["bias"]),
            n_train=int(p["n_train"]),
        )


def kkt_residuals(model: SVMModel, X, y) -> np.ndarray:
    """Per-instance violation of the KKT conditions on the training set."""
    y = np.asarray(y, dtype=float)
    margin = y * model.decision_function(X)
    a = model.full_alphas()
    at_lower = a <= 0.0
    at_upper = a >= model.C
    free = ~(at_lower | at_upper)
    res = np.zeros(len(y))
    res[at_lower] = np.maximum(0.0, 1.0 - margin[at_lower])
    res[at_upper] = np.maximum(0.0, margin[at_upper] - 1.0)
    res[free] = np.abs(margin[free] - 1.0)
    return res


def train_svm_smo(
    X,
    y,
    C: float = 1.0,
    gamma: float = 1.0,
    *,
    tol: float = TOL,
    max_passes: int = MAX_PASSES,
) -> SVMModel:
    X = np.atleast_2d(np.asarray(X, dtype=float))
    y = np.where(np.asarray(y) == 1, 1.0, -1.0)
    if C <= 0 or gamma <= 0:
        raise DomainError(f"C and gamma must be positive, got C={C}, gamma={gamma}")
    if not ((y == 1).any() and (y == -1).any()):
        raise DegenerateClassError("SVM needs both classes")
    n = X.shape[0]
    scaler = MinMaxScaler.fit(X)
    Z = scaler.transform(X)
    K = _KernelRows(Z, gamma)

    alpha = np.zeros(n)
    G = -np.ones(n)  # gradient of the dual objective, Q alpha - e
    max_iter = max_passes * n
    it = 0
    gap = np.inf
    while True:
        yG = -y * G
        up = ((y > 0) & (alpha < C)) | ((y < 0) & (alpha > 0))
        low = ((y < 0) & (alpha < C)) | ((y > 0) & (alpha > 0))
        up_vals = np.where(up, yG, -np.inf)
        i = int(np.argmax(up_vals))
        m = up_vals[i]
        M = np.min(np.where(low, yG, np.inf))
        gap = m - M
        if gap < tol:
            break
        if it >= max_iter:
            raise ConvergenceError(f"SMO did not converge in {max_iter} iterations", gap)

        Ki = K.row(i)
        b = m - yG
        a = 1.0 + 1.0 - 2.0 * Ki  # K_ii = K_tt = 1 for the RBF kernel
        a = np.where(a > 0, a, _TAU)
        cand = low & (yG < m)
        score = np.where(cand, -(b * b) / a, np.inf)
        j = int(np.argmin(score))
        Kj = K.row(j)

        ai_old, aj_old = alpha[i], alpha[j]
        Qij = y[i] * y[j] * Ki[j]
        if y[i] != y[j]:
            quad = max(2.0 + 2.0 * Qij, _TAU)
            delta = (-G[i] - G[j]) / quad
            diff = alpha[i] - alpha[j]
            alpha[i] += delta
            alpha[j] += delta
            if diff > 0:
                if alpha[j] < 0:
                    alpha[j] = 0.0
                    alpha[i] = diff
            elif alpha[i] < 0:
                alpha[i] = 0.0
                alpha[j] = -diff
            if diff > 0:
                if alpha[i] > C:
                    alpha[i] = C
                    alpha[j] = C - diff
            elif alpha[j] > C:
                alpha[j] = C
                alpha[i] = C + diff
        else:
            quad = max(2.0 - 2.0 * Qij, _TAU)
            delta = (G[i] - G[j]) / quad
            total = alpha[i] + alpha[j]
            alpha[i] -= delta
            alpha[j] += delta
            if total > C:
                if alpha[i] > C:
                    alpha[i] = C
                    alpha[j] = total - C
            elif alpha[j] < 0:
                alpha[j] = 0.0
                alpha[i] = total
            if total > C:
                if alpha[j] > C:
                    alpha[j] = C
                    alpha[i] = total - C
            elif alpha[i] < 0:
                alpha[i] = 0.0
                alpha[j] = total

        d_i = alpha[i] - ai_old
        d_j = alpha[j] - aj_old
        G += y * (y[i] * d_i * Ki + y[j] * d_j * Kj)
        it += 1

    # bias from free vectors, or the midpoint of the feasible range
    yG = y * G
    at_upper = alpha >= C
    at_lower = alpha <= 0
    free = ~(at_upper | at_lower)
    if free.any():
        rho = float(yG[free].mean())
    else:
        ub_mask = (at_upper & (y < 0)) | (at_lower & (y > 0))
        lb_mask = (at_upper & (y > 0)) | (at_lower & (y < 0))
        ub = yG[ub_mask].min() if ub_mask.any() else np.inf
        lb = yG[lb_mask].max() if lb_mask.any() else -np.inf
        rho = float((ub + lb) / 2.0)

    sv = np.flatnonzero(alpha > 0)
    logger.debug("SMO converged: %d iterations, gap %.2e, %d support vectors", it, gap, len(sv))
    return SVMModel(
        gamma=float(gamma),
        C=float(C),
        scaler=scaler,
        support_vectors=Z[sv].copy(),
        dual_coef=alpha[sv] * y[sv],
        alphas=alpha[sv].copy(),
        support_indices=sv,
        bias=-rho,
        n_train=n,
        iterations=it,
        residual=float(gap),
    )
