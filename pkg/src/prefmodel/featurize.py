"""Turn-level feature vectors built from a player's log and its opponent's.

Each turn t >= 6 becomes one instance.  Thirteen score indicators get the
full set of seven composite operators, the four per-turn rates get the
three operators that do not involve the opponent, and the war counters are
passed through.  Offline mode appends the two end-of-match fields.
"""

from __future__ import annotations

import csv
import hashlib
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import DomainError, ModeError, PairingError, WindowError
from .telemetry import PREFERENCES, MatchLog, PreferenceVector, binarize, pair_logs

MODES = ("online", "offline")
WINDOW = 6  # first turn at which every composite operator is defined

OPERATORS = (
    "Derivate",
    "Trend",
    "TrendDerivate",
    "Diff",
    "DiffDerivate",
    "DiffTrend",
    "DiffTrendDerivate",
)
OWN_OPERATORS = OPERATORS[:3]

FULL_INDICATORS = (
    "cities",
    "units",
    "population",
    "gold",
    "land",
    "plots",
    "techs",
    "score",
    "economy",
    "industry",
    "agriculture",
    "power",
    "culture",
)
RATE_INDICATORS = ("maintenance", "gold_rate", "research_rate", "culture_rate")
TAIL_INDICATORS = (
    "state_religion_diff",
    "declared_war",
    "cumulative_declared_war",
    "average_declared_war",
    "cumulative_war",
    "average_war",
)

# Code 0 is never used so that the sign of the feature carries the outcome.
VICTORY_TYPES = ("time", "space_race", "conquest", "domination", "cultural", "diplomatic")


def display_name(indicator: str) -> str:
    return "".join(part.capitalize() for part in indicator.split("_"))


@dataclass(frozen=True)
class FeatureSpec:
    index: int  # 1-based position in the registry
    name: str
    kind: str  # "base", "composite" or "end_of_match"
    indicator: str | None = None
    operator: str | None = None


def _build_registry() -> tuple[FeatureSpec, ...]:
    specs = [("Turn", "base", "turn", None), ("War", "base", "war", None)]
    for ind in FULL_INDICATORS:
        specs.append((display_name(ind), "base", ind, None))
        specs += [(display_name(ind) + op, "composite", ind, op) for op in OPERATORS]
    for ind in RATE_INDICATORS:
        specs.append((display_name(ind), "base", ind, None))
        specs += [(display_name(ind) + op, "composite", ind, op) for op in OWN_OPERATORS]
    specs += [(display_name(ind), "base", ind, None) for ind in TAIL_INDICATORS]
    specs += [("VictoryType", "end_of_match", None, None), ("Peace", "end_of_match", None, None)]
    return tuple(FeatureSpec(i + 1, *s) for i, s in enumerate(specs))


FEATURE_REGISTRY = _build_registry()
assert len(FEATURE_REGISTRY) == 130


def feature_names(mode: str = "offline") -> tuple[str, ...]:
    _check_mode(mode)
    n = 130 if mode == "offline" else 128
    return tuple(spec.name for spec in FEATURE_REGISTRY[:n])


def registry_fingerprint(names: Sequence[str]) -> str:
    """Short stable hash of an ordered feature-name list."""
    return hashlib.sha256("\n".join(names).encode("utf-8")).hexdigest()[:16]


def _check_mode(mode):
    if mode not in MODES:
        raise DomainError(f"mode must be one of {MODES}, got {mode!r}")


def composite_series(v: np.ndarray, w: np.ndarray) -> np.ndarray:
    """All seven composite operators for turns 6..n.

    Returns an ``(n - 5, 7)`` array whose columns follow ``OPERATORS``.
    Five-term sums are accumulated newest-first.
    """
    v = np.asarray(v, dtype=float)
    w = np.asarray(w, dtype=float)
    if v.shape != w.shape:
        raise PairingError(f"series lengths differ: {v.shape[0]} vs {w.shape[0]}")
    n = v.shape[0]
    if n < WINDOW:
        raise WindowError(f"need at least {WINDOW} turns, got {n}")
    d = v - w

    def lag(x, k):
        return x[WINDOW - 1 - k : n - k]

    def trend(x):
        total = lag(x, 0) + lag(x, 1)
        for k in (2, 3, 4):
            total = total + lag(x, k)
        return total / 5

    diff_sum = (lag(v, 0) - lag(w, 0)) + (lag(v, 1) - lag(w, 1))
    for k in (2, 3, 4):
        diff_sum = diff_sum + (lag(v, k) - lag(w, k))

    out = np.empty((n - WINDOW + 1, len(OPERATORS)))
    out[:, 0] = lag(v, 0) - lag(v, 1)
    out[:, 1] = trend(v)
    out[:, 2] = lag(v, 0) - lag(v, 5)
    out[:, 3] = lag(d, 0)
    out[:, 4] = lag(d, 0) - lag(d, 1)
    out[:, 5] = diff_sum / 5
    out[:, 6] = lag(d, 0) - lag(d, 5)
    return out


def composite_values(v: np.ndarray, w: np.ndarray, t: int) -> np.ndarray:
    """The seven composite operators of one series pair at 1-based turn ``t``."""
    n = len(v)
    if len(w) != n:
        raise PairingError(f"series lengths differ: {n} vs {len(w)}")
    if t < WINDOW:
        raise WindowError(f"turn {t} < {WINDOW}: composite window incomplete")
    if t > n:
        raise WindowError(f"turn {t} beyond last turn {n}")
    return composite_series(v[:t], w[:t])[-1]


def compose_features(own: MatchLog, opp: MatchLog, turn: int) -> np.ndarray:
    """Composite block of the registry (composite-kind features, in order) at ``turn``."""
    if own.n_turns != opp.n_turns:
        raise PairingError(f"turn counts differ: {own.n_turns} vs {opp.n_turns}")
    cache = {}
    out = []
    for spec in FEATURE_REGISTRY:
        if spec.kind != "composite":
            continue
        if spec.indicator not in cache:
            cache[spec.indicator] = composite_values(
                own.series(spec.indicator), opp.series(spec.indicator), turn
            )
        out.append(cache[spec.indicator][OPERATORS.index(spec.operator)])
    return np.array(out)


def victory_code(log: MatchLog) -> int:
    """Signed victory-type code: positive for the winner, negative for the loser."""
    if log.victory_type not in VICTORY_TYPES:
        raise ModeError(f"{log.match_id}: unknown victory type {log.victory_type!r}")
    code = VICTORY_TYPES.index(log.victory_type) + 1
    return code if log.outcome == "victory" else -code


def featurize_pair(own: MatchLog, opp: MatchLog, mode: str = "online") -> np.ndarray:
    """Feature matrix for turns 6..n of ``own``; rows follow turn order."""
    _check_mode(mode)
    if own.n_turns != opp.n_turns:
        raise PairingError(f"turn counts differ: {own.n_turns} vs {opp.n_turns}")
    if own.n_turns < WINDOW:
        raise WindowError(f"{own.match_id}: {own.n_turns} turns, need at least {WINDOW}")
    if mode == "offline" and not own.has_outcome:
        raise ModeError(f"{own.match_id}: offline features need outcome, victory type and peace")

    n_rows = own.n_turns - WINDOW + 1
    names = feature_names(mode)
    X = np.empty((n_rows, len(names)))
    composites = {}
    for j, spec in enumerate(FEATURE_REGISTRY[: len(names)]):
        if spec.kind == "base":
            if spec.indicator == "turn":
                X[:, j] = np.arange(WINDOW, own.n_turns + 1)
            else:
                X[:, j] = own.series(spec.indicator)[WINDOW - 1 :]
        elif spec.kind == "composite":
            if spec.indicator not in composites:
                composites[spec.indicator] = composite_series(
                    own.series(spec.indicator), opp.series(spec.indicator)
                )
            X[:, j] = composites[spec.indicator][:, OPERATORS.index(spec.operator)]
        elif spec.name == "VictoryType":
            X[:, j] = victory_code(own)
        else:
            X[:, j] = own.peace
    return X


@dataclass(frozen=True)
class Instance:
    features: np.ndarray
    label: int
    match_id: str
    turn: int
    mode: str

    @property
    def feature_names(self) -> tuple[str, ...]:
        return feature_names(self.mode)


def binarize_label(level: int) -> int:
    return binarize(level)


def assemble_instance(own: MatchLog, opp: MatchLog, turn: int, mode: str, target: str) -> Instance:
    if target not in PREFERENCES:
        raise DomainError(f"unknown preference {target!r}")
    if turn < WINDOW or turn > own.n_turns:
        raise WindowError(f"turn {turn} outside {WINDOW}..{own.n_turns}")
    X = featurize_pair(own, opp, mode)
    return Instance(
        features=X[turn - WINDOW].copy(),
        label=binarize_label(own.preference[target]),
        match_id=own.match_id,
        turn=turn,
        mode=mode,
    )


@dataclass(frozen=True)
class MatchRef:
    """Lightweight stand-in for a match when only its id and labels matter."""

    match_id: str
    preference: PreferenceVector
    agent_id: str = ""


@dataclass
class FeatureMatrix:
    """Dense instance matrix plus per-row provenance and raw preference levels."""

    X: np.ndarray
    feature_names: tuple[str, ...]
    match_ids: np.ndarray
    turns: np.ndarray
    levels: np.ndarray  # (n, 6) raw preference levels, columns follow PREFERENCES
    agent_ids: np.ndarray

    def __len__(self):
        return self.X.shape[0]

    @property
    def mode(self) -> str:
        return "offline" if len(self.feature_names) == 130 else "online"

    @property
    def fingerprint(self) -> str:
        return registry_fingerprint(self.feature_names)

    def labels(self, target: str) -> np.ndarray:
        if target not in PREFERENCES:
            raise DomainError(f"unknown preference {target!r}")
        return np.where(self.levels[:, PREFERENCES.index(target)] == 0, -1, 1)

    def subset(self, mask) -> "FeatureMatrix":
        return FeatureMatrix(
            X=self.X[mask],
            feature_names=self.feature_names,
            match_ids=self.match_ids[mask],
            turns=self.turns[mask],
            levels=self.levels[mask],
            agent_ids=self.agent_ids[mask],
        )

    def select_matches(self, match_ids: Iterable[str]) -> "FeatureMatrix":
        return self.subset(np.isin(self.match_ids, list(match_ids)))

    def match_refs(self) -> list[MatchRef]:
        """One :class:`MatchRef` per match, in order of first appearance."""
        _, first = np.unique(self.match_ids, return_index=True)
        refs = []
        for i in sorted(first):
            refs.append(
                MatchRef(
                    str(self.match_ids[i]),
                    PreferenceVector.from_sequence(self.levels[i]),
                    str(self.agent_ids[i]),
                )
            )
        return refs

    @classmethod
    def concat(cls, parts: Sequence["FeatureMatrix"]) -> "FeatureMatrix":
        if not parts:
            raise DomainError("nothing to concatenate")
        names = parts[0].feature_names
        if any(p.feature_names != names for p in parts):
            raise PairingError("feature matrices use different registries")
        return cls(
            X=np.vstack([p.X for p in parts]),
            feature_names=names,
            match_ids=np.concatenate([p.match_ids for p in parts]),
            turns=np.concatenate([p.turns for p in parts]),
            levels=np.vstack([p.levels for p in parts]),
            agent_ids=np.concatenate([p.agent_ids for p in parts]),
        )

    def write_csv(self, path_or_stream, target: str) -> None:
        """One row per instance; header is the registry names then ``label,match_id,turn``."""
        labels = self.labels(target)

        def _write(fh):
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow([*self.feature_names, "label", "match_id", "turn"])
            for i in range(len(self)):
                writer.writerow(
                    [repr(float(x)) for x in self.X[i]]
                    + [int(labels[i]), self.match_ids[i], int(self.turns[i])]
                )

        if hasattr(path_or_stream, "write"):
            _write(path_or_stream)
        else:
            with open(path_or_stream, "w", encoding="utf-8", newline="") as fh:
                _write(fh)


def read_feature_csv(path) -> tuple[np.ndarray, np.ndarray, list[str], np.ndarray, np.ndarray]:
    """Inverse of :meth:`FeatureMatrix.write_csv`: ``(X, labels, names, match_ids, turns)``."""
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = list(reader)
    names = header[:-3]
    X = np.array([[float(c) for c in r[: len(names)]] for r in rows]).reshape(len(rows), len(names))
    labels = np.array([int(r[-3]) for r in rows])
    match_ids = np.array([r[-2] for r in rows], dtype=object)
    turns = np.array([int(r[-1]) for r in rows])
    return X, labels, names, match_ids, turns


def drop_early_turns(fm: FeatureMatrix, cutoff: int = 100) -> FeatureMatrix:
    """Keep only instances whose turn is strictly greater than ``cutoff``."""
    if cutoff < 0:
        raise DomainError(f"cutoff must be >= 0, got {cutoff}")
    return fm.subset(fm.turns > cutoff)


def featurize_log(own: MatchLog, opp: MatchLog, mode: str = "online") -> FeatureMatrix:
    X = featurize_pair(own, opp, mode)
    n = X.shape[0]
    return FeatureMatrix(
        X=X,
        feature_names=feature_names(mode),
        match_ids=np.full(n, own.match_id, dtype=object),
        turns=np.arange(WINDOW, own.n_turns + 1),
        levels=np.tile(np.array(own.preference.as_tuple()), (n, 1)),
        agent_ids=np.full(n, own.agent_id, dtype=object),
    )


def build_feature_matrix(
    logs: Iterable[MatchLog], mode: str = "online", cutoff: int = 100
) -> FeatureMatrix:
    """Featurize every log against its opponent and drop turns <= ``cutoff``.

    Logs are processed in match-id order so the result does not depend on
    the order of ``logs``.
    """
    pairs = sorted(pair_logs(logs), key=lambda p: p[0].match_id)
    if not pairs:
        raise DomainError("no logs to featurize")
    parts = [drop_early_turns(featurize_log(own, opp, mode), cutoff) for own, opp in pairs]
    return FeatureMatrix.concat(parts)
