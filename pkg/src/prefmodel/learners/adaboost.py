"""Discrete AdaBoost over depth-1 decision stumps."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from ..errors import DegenerateClassError, WeakLearnerError

logger = logging.getLogger(__name__)

EPS_CLIP = 1e-10
DEFAULT_ROUNDS = 30


@dataclass(frozen=True)
class Stump:
    feature: int
    threshold: float
    polarity: int  # prediction for x > threshold

    def predict(self, X) -> np.ndarray:
        X = np.atleast_2d(X)
        return np.where(X[:, self.feature] > self.threshold, self.polarity, -self.polarity)


@dataclass(frozen=True)
class EnsembleModel:
    stumps: tuple[Stump, ...]
    alphas: tuple[float, ...]
    epsilons: tuple[float, ...]  # weighted training error of each retained stump
    weight_sums: tuple[float, ...] = field(default=(), compare=False)
    training_error: float = field(default=float("nan"), compare=False)

    kind = "adaboost"

    @property
    def rounds(self) -> int:
        return len(self.stumps)

    def error_bound(self) -> float:
        """``prod_t 2 sqrt(eps_t (1 - eps_t))``, the classical training-error bound."""
        eps = np.asarray(self.epsilons)
        return float(np.prod(2.0 * np.sqrt(eps * (1.0 - eps))))

    def decision_function(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        score = np.zeros(X.shape[0])
        for stump, alpha in zip(self.stumps, self.alphas):
            score += alpha * stump.predict(X)
        return score

    def predict(self, X) -> np.ndarray:
        # a zero score resolves to -1
        return np.where(self.decision_function(X) > 0, 1, -1)

    def to_params(self) -> dict:
        return {
            "stumps": [[s.feature, s.threshold, s.polarity] for s in self.stumps],
            "alphas": list(self.alphas),
            "epsilons": list(self.epsilons),
            "training_error": self.training_error,
        }

    @classmethod
    def from_params(cls, params: dict) -> "EnsembleModel":
        stumps = tuple(Stump(int(f), float(t), int(p)) for f, t, p in params["stumps"])
        return cls(
            stumps,
            tuple(float(a) for a in params["alphas"]),
            tuple(float(e) for e in params["epsilons"]),
            training_error=float(params.get("training_error", "nan")),
        )


class _StumpSearch:
    """Exhaustive weighted stump search with per-feature orderings computed once."""

    def __init__(self, X, y):
        self.X = X
        self.order = np.argsort(X, axis=0, kind="stable")
        self.Xs = np.take_along_axis(X, self.order, axis=0)
        self.pos = (y[self.order] == 1)
        n = X.shape[0]
        # a cut after sorted row k is usable only between distinct values
        self.valid = np.ones_like(self.Xs, dtype=bool)
        self.valid[: n - 1] = self.Xs[1:] != self.Xs[:-1]
        upper = np.vstack([self.Xs[1:], self.Xs[-1:] + 1.0])
        self.thresholds = (self.Xs + upper) / 2.0
        self.low = self.Xs[0] - 1.0  # threshold below every value

    def best(self, w) -> tuple[Stump, float]:
        Ws = w[self.order]
        wp = np.where(self.pos, Ws, 0.0)
        wn = Ws - wp
        total_pos = wp[:, 0].sum()
        total_neg = wn[:, 0].sum()
        # polarity +1 with the cut after row k: rows <= k predicted -1
        err = np.cumsum(wp, axis=0) + (total_neg - np.cumsum(wn, axis=0))
        err = np.where(self.valid, err, np.inf)
        flipped = np.where(self.valid, (total_pos + total_neg) - err, np.inf)

        k_pos = np.argmin(err, axis=0)
        k_neg = np.argmin(flipped, axis=0)
        d = self.X.shape[1]
        cols = np.arange(d)
        e_pos = err[k_pos, cols]
        e_neg = flipped[k_neg, cols]
        # cut below all rows: everything predicted +polarity
        e_all = np.full(d, total_neg)
        candidates = np.stack([e_all, e_pos, e_neg])  # (3, d)
        flat = int(np.argmin(candidates.T.ravel()))
        j, which = divmod(flat, 3)
        if which == 0:
            stump = Stump(j, float(self.low[j]), 1)
        elif which == 1:
            stump = Stump(j, float(self.thresholds[k_pos[j], j]), 1)
        else:
            stump = Stump(j, float(self.thresholds[k_neg[j], j]), -1)
        return stump, float(candidates[which, j])


def train_adaboost(X, y, rounds: int = DEFAULT_ROUNDS) -> EnsembleModel:
    """Train ``rounds`` boosting rounds of decision stumps.

    Each round fits the stump with the lowest weighted error and
    re-weights the training set.  Training stops early when a stump's error
    reaches 1/2 (it is discarded) or 0 (it is kept, with its error clipped
    to ``EPS_CLIP`` for the vote weight).
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    y = np.asarray(y, dtype=int)
    if rounds < 1:
        raise ValueError(f"rounds must be >= 1, got {rounds}")
    if not ((y == 1).any() and (y == -1).any()):
        raise DegenerateClassError("AdaBoost needs both classes")
    n = X.shape[0]
    w = np.full(n, 1.0 / n)
    search = _StumpSearch(X, y)

    stumps, alphas, epsilons, sums = [], [], [], []
    for t in range(rounds):
        stump, _ = search.best(w)
        h = stump.predict(X)
        eps = float(w[h != y].sum())
        if eps >= 0.5:
            if t == 0:
                raise WeakLearnerError(f"best stump has weighted error {eps:.4f} >= 1/2")
            logger.info("stopping after %d rounds: weighted error %.4f >= 1/2", t, eps)
            break
        eps_c = max(eps, EPS_CLIP)
        alpha = 0.5 * np.log((1.0 - eps_c) / eps_c)
        stumps.append(stump)
        alphas.append(float(alpha))
        epsilons.append(eps)
        if eps == 0.0:
            sums.append(float(w.sum()))
            break
        w = w * np.exp(-alpha * y * h)
        w /= w.sum()
        sums.append(float(w.sum()))

    model = EnsembleModel(tuple(stumps), tuple(alphas), tuple(epsilons), tuple(sums))
    train_err = float(np.mean(model.predict(X) != y))
    return EnsembleModel(model.stumps, model.alphas, model.epsilons, model.weight_sums, train_err)
