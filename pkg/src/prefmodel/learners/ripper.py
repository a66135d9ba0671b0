"""Rule induction in the IREP style of RIPPER.

Rules predict the positive class; anything no rule covers is negative.
Each rule is grown greedily on two thirds of the remaining data using FOIL
information gain and then pruned back on the other third.  Rule learning
stops once a freshly pruned rule is wrong on half or more of the prune
examples it covers.  RIPPER's description-length stop and its global
optimisation passes are not implemented.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from ..sampling import make_rng

logger = logging.getLogger(__name__)

MAX_DISCRETE_VALUES = 8
_OP_SYMBOL = {"<=": "<=", ">=": ">=", "==": "="}


def _fmt(value: float) -> str:
    if float(value).is_integer():
        return str(int(value))
    return f"{value:.6g}"


@dataclass(frozen=True)
class Condition:
    feature: int
    name: str
    op: str
    value: float

    def covers(self, X) -> np.ndarray:
        col = np.atleast_2d(X)[:, self.feature]
        if self.op == "<=":
            return col <= self.value
        if self.op == ">=":
            return col >= self.value
        return col == self.value

    def render(self) -> str:
        return f"{self.name} {_OP_SYMBOL[self.op]} {_fmt(self.value)}"


@dataclass(frozen=True)
class Rule:
    conditions: tuple[Condition, ...]
    covered: int = 0
    errors: int = 0

    def covers(self, X) -> np.ndarray:
        X = np.atleast_2d(X)
        mask = np.ones(X.shape[0], dtype=bool)
        for cond in self.conditions:
            mask &= cond.covers(X)
        return mask

    def render(self, positive: str = "+1") -> str:
        body = " ∧ ".join(c.render() for c in self.conditions) or "TRUE"
        return f"{body} → {positive} ({self.covered}/{self.errors})"


@dataclass(frozen=True)
class RuleSet:
    rules: tuple[Rule, ...]
    default_covered: int = 0
    default_errors: int = 0
    positive_name: str = "+1"
    negative_name: str = "-1"

    kind = "ripper"

    def decision_function(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        hit = np.zeros(X.shape[0], dtype=bool)
        for rule in self.rules:
            hit |= rule.covers(X)
        return np.where(hit, 1.0, -1.0)

    def predict(self, X) -> np.ndarray:
        return self.decision_function(X).astype(int)

    def render(self, positive: str | None = None, negative: str | None = None) -> str:
        positive = positive or self.positive_name
        negative = negative or self.negative_name
        lines = [r.render(positive) for r in self.rules]
        lines.append(f"(default) → {negative} ({self.default_covered}/{self.default_errors})")
        return "\n".join(lines)

    def to_params(self) -> dict:
        return {
            "rules": [
                {
                    "conditions": [[c.feature, c.name, c.op, c.value] for c in r.conditions],
                    "covered": r.covered,
                    "errors": r.errors,
                }
                for r in self.rules
            ],
            "default": [self.default_covered, self.default_errors],
            "labels": [self.positive_name, self.negative_name],
        }

    @classmethod
    def from_params(cls, params: dict) -> "RuleSet":
        rules = tuple(
            Rule(
                tuple(Condition(int(f), str(n), str(o), float(v)) for f, n, o, v in r["conditions"]),
                int(r["covered"]),
                int(r["errors"]),
            )
            for r in params["rules"]
        )
        dc, de = params.get("default", [0, 0])
        pos, neg = params.get("labels", ["+1", "-1"])
        return cls(rules, int(dc), int(de), pos, neg)


def _foil_gain(p1, n1, p0, n0):
    with np.errstate(divide="ignore", invalid="ignore"):
        gain = p1 * (np.log2(p1 / (p1 + n1)) - np.log2(p0 / (p0 + n0)))
    return np.where(p1 > 0, gain, -np.inf)


@dataclass
class _Grower:
    X: np.ndarray
    pos: np.ndarray  # bool, grow-set labels
    names: Sequence[str]
    discrete: list = field(default_factory=list)

    def __post_init__(self):
        self.order = np.argsort(self.X, axis=0, kind="stable")
        self.Xs = np.take_along_axis(self.X, self.order, axis=0)
        self.pos_s = self.pos[self.order]
        n = self.X.shape[0]
        self.valid = np.zeros_like(self.Xs, dtype=bool)
        self.valid[: n - 1] = self.Xs[1:] != self.Xs[:-1]
        self.discrete = []
        for j in range(self.X.shape[1]):
            values = np.unique(self.X[:, j])
            if 2 < len(values) <= MAX_DISCRETE_VALUES and np.all(values == np.round(values)):
                self.discrete.append((j, values))

    def best_condition(self, covered: np.ndarray):
        p0 = float((covered & self.pos).sum())
        n0 = float((covered & ~self.pos).sum())
        cov_s = covered[self.order]
        cp = np.cumsum(cov_s & self.pos_s, axis=0, dtype=float)
        cn = np.cumsum(cov_s & ~self.pos_s, axis=0, dtype=float)
        le = np.where(self.valid, _foil_gain(cp, cn, p0, n0), -np.inf)
        ge = np.where(self.valid, _foil_gain(p0 - cp, n0 - cn, p0, n0), -np.inf)

        best_gain, best = 0.0, None
        k_le = np.argmax(le, axis=0)
        k_ge = np.argmax(ge, axis=0)
        for j in range(self.X.shape[1]):
            g = le[k_le[j], j]
            if g > best_gain + 1e-12:
                best_gain, best = g, Condition(j, self.names[j], "<=", float(self.Xs[k_le[j], j]))
            g = ge[k_ge[j], j]
            if g > best_gain + 1e-12:
                best_gain, best = g, Condition(j, self.names[j], ">=", float(self.Xs[k_ge[j] + 1, j]))
        for j, values in self.discrete:
            col = self.X[:, j]
            for v in values:
                hit = covered & (col == v)
                p1 = float((hit & self.pos).sum())
                n1 = float((hit & ~self.pos).sum())
                g = float(_foil_gain(np.array(p1), np.array(n1), p0, n0))
                if g > best_gain + 1e-12:
                    best_gain, best = g, Condition(j, self.names[j], "==", float(v))
        return best

    def grow(self, max_conditions: int) -> list[Condition]:
        covered = np.ones(self.X.shape[0], dtype=bool)
        conditions = []
        while (covered & ~self.pos).any() and len(conditions) < max_conditions:
            cond = self.best_condition(covered)
            if cond is None:
                break
            conditions.append(cond)
            covered &= cond.covers(self.X)
        return conditions


def _prune_value(conditions, X, pos):
    mask = Rule(tuple(conditions)).covers(X)
    p = float((mask & pos).sum())
    n = float((mask & ~pos).sum())
    if p + n == 0:
        return -np.inf, p, n
    return (p - n) / (p + n), p, n


def prune_rule(conditions: Sequence[Condition], X, pos) -> list[Condition]:
    """Delete the final conditions whose removal maximises ``(p - n) / (p + n)``."""
    if len(conditions) <= 1:
        return list(conditions)
    best_len, best_val = len(conditions), _prune_value(conditions, X, pos)[0]
    for length in range(len(conditions) - 1, 0, -1):
        val = _prune_value(conditions[:length], X, pos)[0]
        if val > best_val:
            best_len, best_val = length, val
    return list(conditions[:best_len])


def _split(pos: np.ndarray, rng, prune_fraction: float):
    grow, prune = [], []
    for cls_mask in (pos, ~pos):
        idx = np.flatnonzero(cls_mask)
        idx = idx[rng.permutation(len(idx))]
        n_prune = int(round(len(idx) * prune_fraction))
        prune.append(idx[:n_prune])
        grow.append(idx[n_prune:])
    return np.sort(np.concatenate(grow)), np.sort(np.concatenate(prune))


def train_ripper(
    X,
    y,
    feature_names: Sequence[str] | None = None,
    *,
    seed: int = 0,
    prune_fraction: float = 1 / 3,
    max_rules: int = 64,
    max_conditions: int = 32,
    positive_name: str = "+1",
    negative_name: str = "-1",
) -> RuleSet:
    X = np.atleast_2d(np.asarray(X, dtype=float))
    y = np.asarray(y)
    names = list(feature_names) if feature_names is not None else [f"x{j + 1}" for j in range(X.shape[1])]
    rng = make_rng(seed)
    remaining = np.ones(X.shape[0], dtype=bool)
    rules = []

    while len(rules) < max_rules:
        idx = np.flatnonzero(remaining)
        pos = y[idx] == 1
        if not pos.any():
            break
        g_idx, p_idx = _split(pos, rng, prune_fraction)
        if len(p_idx) == 0:
            p_idx = g_idx
        Xg, pos_g = X[idx[g_idx]], pos[g_idx]
        Xp, pos_p = X[idx[p_idx]], pos[p_idx]
        if not pos_g.any():
            Xg, pos_g = X[idx], pos
        conditions = _Grower(Xg, pos_g, names).grow(max_conditions)
        conditions = prune_rule(conditions, Xp, pos_p)
        _, p, n = _prune_value(conditions, Xp, pos_p)
        if p + n == 0 or n / (p + n) >= 0.5:
            logger.debug("stopping: prune-set error %s/%s", n, p + n)
            break
        rule = Rule(tuple(conditions))
        rules.append(rule)
        remaining[idx[rule.covers(X[idx])]] = False

    # covered/errors over the full training set, in evaluation order
    unclaimed = np.ones(X.shape[0], dtype=bool)
    final = []
    for rule in rules:
        hit = unclaimed & rule.covers(X)
        final.append(Rule(rule.conditions, int(hit.sum()), int((hit & (y != 1)).sum())))
        unclaimed &= ~hit
    return RuleSet(
        tuple(final),
        int(unclaimed.sum()),
        int((unclaimed & (y == 1)).sum()),
        positive_name,
        negative_name,
    )
