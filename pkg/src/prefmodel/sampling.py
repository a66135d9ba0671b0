"""Match-level dataset splitting: Algorithm-1 sampling, test splits, stratified folds.

Every function works on whole matches so that the turns of one match never
end up on both sides of a split.  A "match" is any object with ``match_id``
and ``preference`` attributes (``MatchLog`` or ``MatchRef``).

Randomness comes from numpy's PCG64 generator seeded with the caller's
64-bit seed; shuffles are numpy's Fisher-Yates permutation.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import DomainError, SplitError, StratificationError


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(int(seed) & 0xFFFFFFFFFFFFFFFF))


def _partition(matches, target):
    with_pref = [m for m in matches if m.preference[target] != 0]
    without_pref = [m for m in matches if m.preference[target] == 0]
    return with_pref, without_pref


def _shuffled(items, rng):
    return [items[i] for i in rng.permutation(len(items))]


def sample_matches(matches: Sequence, target: str, perc: float, seed: int) -> list:
    """Stratified match sampling.

    Splits ``matches`` into those whose agent has the ``target`` preference
    and those that do not, shuffles each part, and keeps the first
    ``floor(len(part) * perc)`` of each.
    """
    if not 0.0 <= perc <= 1.0:
        raise DomainError(f"perc must lie in [0, 1], got {perc}")
    rng = make_rng(seed)
    with_pref, without_pref = _partition(matches, target)
    with_pref = _shuffled(with_pref, rng)
    without_pref = _shuffled(without_pref, rng)
    n_with = math.floor(len(with_pref) * perc)
    n_without = math.floor(len(without_pref) * perc)
    return with_pref[:n_with] + without_pref[:n_without]


def _allocate(sizes: Sequence[int], total: int) -> list[int]:
    """Largest-remainder allocation of ``total`` across classes of ``sizes``."""
    n = sum(sizes)
    exact = [s * total / n for s in sizes]
    counts = [math.floor(e) for e in exact]
    order = sorted(range(len(sizes)), key=lambda i: (-(exact[i] - counts[i]), i))
    for i in order[: total - sum(counts)]:
        counts[i] += 1
    return counts


def make_test_split(
    matches: Sequence, target: str, fraction: float = 0.1, seed: int = 0
) -> tuple[list, list]:
    """Hold out ``floor(n * fraction)`` whole matches, stratified by label.

    Returns ``(test, remainder)``.  Class quotas use largest-remainder
    rounding so the quotas add up to the requested size exactly.
    """
    if not 0.0 < fraction < 1.0:
        raise DomainError(f"fraction must lie in (0, 1), got {fraction}")
    n_test = math.floor(len(matches) * fraction)
    if n_test < 1:
        raise SplitError(f"{len(matches)} matches x {fraction} gives an empty test set")
    rng = make_rng(seed)
    parts = [_shuffled(p, rng) for p in _partition(matches, target)]
    quotas = _allocate([len(p) for p in parts], n_test)
    test, remainder = [], []
    for part, q in zip(parts, quotas):
        test += part[:q]
        remainder += part[q:]
    return test, remainder


@dataclass
class FoldSpec:
    k: int
    seed: int
    assignment: dict[str, int] = field(default_factory=dict)

    def fold_of(self, match_id: str) -> int:
        return self.assignment[match_id]

    def test_ids(self, fold: int) -> list[str]:
        return sorted(m for m, f in self.assignment.items() if f == fold)

    def train_ids(self, fold: int) -> list[str]:
        return sorted(m for m, f in self.assignment.items() if f != fold)

    def to_json(self) -> str:
        return json.dumps(
            {"k": self.k, "seed": self.seed, "assignment": dict(sorted(self.assignment.items()))},
            indent=2,
        )

    @classmethod
    def from_json(cls, text: str) -> "FoldSpec":
        data = json.loads(text)
        return cls(int(data["k"]), int(data["seed"]), {str(m): int(f) for m, f in data["assignment"].items()})


def stratified_kfold(matches: Sequence, target: str, k: int = 10, seed: int = 0) -> FoldSpec:
    """Assign every match to one of ``k`` folds, preserving the label ratio.

    Each class is shuffled and dealt round-robin; the second class continues
    dealing where the first stopped so fold sizes differ by at most one.
    """
    if k < 2:
        raise DomainError(f"k must be >= 2, got {k}")
    if len(matches) < k:
        raise StratificationError(f"{len(matches)} matches cannot fill {k} folds")
    ids = [m.match_id for m in matches]
    if len(set(ids)) != len(ids):
        raise DomainError("duplicate match ids")
    rng = make_rng(seed)
    assignment = {}
    position = 0
    for part in _partition(matches, target):
        for m in _shuffled(part, rng):
            assignment[m.match_id] = position % k
            position += 1
    return FoldSpec(k=k, seed=seed, assignment=assignment)
