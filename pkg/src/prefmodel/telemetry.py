"""Per-turn match logs: data model, CSV/JSON I/O and derived war counters.

A match log holds one player's view of one 1v1 game.  Both players of a
game get their own log; each log points at its partner through
``opponent_match_id``.
"""

from __future__ import annotations

import csv
import io
import json
import logging
from dataclasses import dataclass, field, replace
from pathlib import Path
from types import MappingProxyType
from typing import Iterable, Mapping

import numpy as np

from .errors import DomainError, PairingError, ParseError, SchemaError, StructureError

logger = logging.getLogger(__name__)

PREFERENCES = ("culture", "gold", "growth", "military", "religion", "science")
LEVELS = (0, 2, 5)

BASE_INDICATORS = (
    "war",
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
    "maintenance",
    "gold_rate",
    "research_rate",
    "culture_rate",
    "state_religion_diff",
    "declared_war",
)
FLAG_INDICATORS = ("war", "declared_war")
DERIVED_INDICATORS = (
    "cumulative_declared_war",
    "average_declared_war",
    "cumulative_war",
    "average_war",
)
OUTCOME_COLUMNS = ("victory_type", "peace")
OUTCOMES = ("victory", "defeat")

DEFAULT_TURN_BOUNDS = (240, 460)


@dataclass(frozen=True)
class PreferenceVector:
    """Six preference levels, each one of 0 (none), 2 (weak) or 5 (strong)."""

    culture: int = 0
    gold: int = 0
    growth: int = 0
    military: int = 0
    religion: int = 0
    science: int = 0

    def __post_init__(self):
        for name in PREFERENCES:
            level = getattr(self, name)
            if level not in LEVELS:
                raise DomainError(f"preference {name}={level!r} not in {LEVELS}")

    def __getitem__(self, name: str) -> int:
        if name not in PREFERENCES:
            raise KeyError(name)
        return getattr(self, name)

    def as_tuple(self) -> tuple[int, ...]:
        return tuple(getattr(self, p) for p in PREFERENCES)

    def as_dict(self) -> dict[str, int]:
        return {p: getattr(self, p) for p in PREFERENCES}

    def has(self, name: str) -> bool:
        """True when the level for ``name`` binarizes to +1."""
        return self[name] != 0

    @classmethod
    def from_sequence(cls, levels: Iterable[int]) -> "PreferenceVector":
        levels = [int(v) for v in levels]
        if len(levels) != len(PREFERENCES):
            raise DomainError(f"expected {len(PREFERENCES)} levels, got {len(levels)}")
        return cls(*levels)

    @classmethod
    def from_dict(cls, data: Mapping[str, int]) -> "PreferenceVector":
        unknown = set(data) - set(PREFERENCES)
        if unknown:
            raise DomainError(f"unknown preference(s): {sorted(unknown)}")
        return cls(**{k: int(v) for k, v in data.items()})


@dataclass(frozen=True)
class TurnRecord:
    turn: int
    values: Mapping[str, float]

    def __getitem__(self, name: str) -> float:
        return self.values[name]


@dataclass(frozen=True)
class MatchLog:
    """One player's per-turn indicator series for one match.

    ``columns`` maps indicator name to a read-only float array indexed by
    ``turn - 1``.  Outcome fields are ``None`` for logs of unfinished games.
    """

    match_id: str
    agent_id: str
    preference: PreferenceVector
    columns: Mapping[str, np.ndarray]
    opponent_match_id: str | None = None
    outcome: str | None = None
    victory_type: str | None = None
    peace: int | None = None
    metadata: Mapping[str, object] = field(default_factory=dict, compare=False)

    def __post_init__(self):
        frozen = {}
        for name, values in self.columns.items():
            arr = np.array(values, dtype=float)
            arr.setflags(write=False)
            frozen[name] = arr
        object.__setattr__(self, "columns", MappingProxyType(frozen))
        if self.outcome is not None and self.outcome not in OUTCOMES:
            raise DomainError(f"outcome must be one of {OUTCOMES}, got {self.outcome!r}")
        if self.peace is not None and self.peace not in (0, 1):
            raise DomainError(f"peace must be 0 or 1, got {self.peace!r}")

    def __eq__(self, other):
        if not isinstance(other, MatchLog):
            return NotImplemented
        scalars = ("match_id", "agent_id", "preference", "opponent_match_id", "outcome", "victory_type", "peace")
        if any(getattr(self, f) != getattr(other, f) for f in scalars):
            return False
        if self.columns.keys() != other.columns.keys():
            return False
        return all(np.array_equal(v, other.columns[k]) for k, v in self.columns.items())

    __hash__ = None

    @property
    def n_turns(self) -> int:
        return len(next(iter(self.columns.values()))) if self.columns else 0

    @property
    def turns(self) -> np.ndarray:
        return np.arange(1, self.n_turns + 1)

    @property
    def has_outcome(self) -> bool:
        return self.outcome is not None and self.victory_type is not None and self.peace is not None

    def series(self, name: str) -> np.ndarray:
        try:
            return self.columns[name]
        except KeyError:
            raise SchemaError(name) from None

    def record(self, turn: int) -> TurnRecord:
        if not 1 <= turn <= self.n_turns:
            raise IndexError(f"turn {turn} outside 1..{self.n_turns}")
        return TurnRecord(turn, {k: float(v[turn - 1]) for k, v in self.columns.items()})

    def records(self):
        for t in range(1, self.n_turns + 1):
            yield self.record(t)


def binarize(level: int) -> int:
    """Map a preference level to the binary class: 0 -> -1, 2 or 5 -> +1."""
    if level not in LEVELS:
        raise DomainError(f"preference level {level!r} not in {LEVELS}")
    return -1 if level == 0 else 1


def derive_cumulatives(log: MatchLog) -> MatchLog:
    """Recompute the running war counters from the per-turn flags.

    ``CumulativeX(t) = sum(X[1..t])`` and ``AverageX(t) = CumulativeX(t) / t``
    for X in {War, DeclaredWar}.  Any values already present are replaced.
    """
    columns = dict(log.columns)
    t = np.arange(1, log.n_turns + 1, dtype=float)
    for flag, cum_name, avg_name in (
        ("war", "cumulative_war", "average_war"),
        ("declared_war", "cumulative_declared_war", "average_declared_war"),
    ):
        if flag not in columns:
            raise SchemaError(flag)
        cum = np.cumsum(columns[flag])
        columns[cum_name] = cum
        columns[avg_name] = cum / t
    return replace(log, columns=columns)


def validate_turns(turns: Iterable[int], bounds: tuple[int, int] | None = None) -> None:
    """Check that ``turns`` (already sorted) run 1, 2, ..., n with no gaps."""
    expected = 1
    for turn in turns:
        if turn != expected:
            raise StructureError(expected)
        expected += 1
    n = expected - 1
    if n == 0:
        raise StructureError(1, "log has no turns")
    if bounds is not None and not bounds[0] <= n <= bounds[1]:
        raise StructureError(n, f"log length {n} outside [{bounds[0]}, {bounds[1]}]")


def _parse_number(text: str, row: int, column: str) -> float:
    try:
        value = float(text)
    except (TypeError, ValueError):
        raise ParseError(row, column, text) from None
    if not np.isfinite(value):
        raise ParseError(row, column, text)
    return value


def parse_match_log(
    source,
    meta: Mapping | None = None,
    *,
    turn_bounds: tuple[int, int] | None = None,
) -> MatchLog:
    """Parse a telemetry CSV stream into a validated :class:`MatchLog`.

    ``source`` is a text stream or a string holding the CSV.  ``meta`` is
    the decoded sidecar JSON (``match_id``, ``agent_id``, ``preference`` and
    optional outcome fields).  Rows may arrive in any order; they are sorted
    by turn before the contiguity check.
    """
    if isinstance(source, str):
        source = io.StringIO(source)
    meta = dict(meta or {})
    reader = csv.reader(source)
    try:
        header = [h.strip() for h in next(reader)]
    except StopIteration:
        raise SchemaError("turn", "empty log: no header row") from None

    for name in ("turn",) + BASE_INDICATORS:
        if name not in header:
            label = "".join(part.capitalize() for part in name.split("_"))
            raise SchemaError(name, f"missing required column: {name} ({label})")
    index = {name: i for i, name in enumerate(header)}

    rows = []
    victory_types = set()
    peaces = set()
    for line_no, cells in enumerate(reader, start=2):
        if not cells or all(not c.strip() for c in cells):
            continue
        if len(cells) != len(header):
            raise ParseError(line_no, "*", f"{len(cells)} cells for {len(header)} columns")
        turn_value = _parse_number(cells[index["turn"]], line_no, "turn")
        if turn_value != int(turn_value) or turn_value < 1:
            raise ParseError(line_no, "turn", cells[index["turn"]])
        values = [_parse_number(cells[index[name]], line_no, name) for name in BASE_INDICATORS]
        for flag in FLAG_INDICATORS:
            v = values[BASE_INDICATORS.index(flag)]
            if v not in (0.0, 1.0):
                raise ParseError(line_no, flag, cells[index[flag]])
        if "victory_type" in index and cells[index["victory_type"]].strip():
            victory_types.add(cells[index["victory_type"]].strip())
        if "peace" in index and cells[index["peace"]].strip():
            peaces.add(int(_parse_number(cells[index["peace"]], line_no, "peace")))
        rows.append((int(turn_value), values))

    rows.sort(key=lambda r: r[0])
    validate_turns((r[0] for r in rows), turn_bounds)
    matrix = np.array([r[1] for r in rows], dtype=float)
    columns = {name: matrix[:, j] for j, name in enumerate(BASE_INDICATORS)}

    victory_type = meta.get("victory_type")
    if victory_type is None and len(victory_types) == 1:
        victory_type = victory_types.pop()
    peace = meta.get("peace")
    if peace is None and len(peaces) == 1:
        peace = peaces.pop()

    preference = meta.get("preference", {})
    if not isinstance(preference, PreferenceVector):
        preference = PreferenceVector.from_dict(preference)

    log = MatchLog(
        match_id=str(meta.get("match_id", "")),
        agent_id=str(meta.get("agent_id", "")),
        preference=preference,
        columns=columns,
        opponent_match_id=meta.get("opponent_match_id"),
        outcome=meta.get("outcome"),
        victory_type=victory_type,
        peace=None if peace is None else int(peace),
    )
    return derive_cumulatives(log)


def format_number(value: float) -> str:
    """Canonical cell text: integral values without a decimal point."""
    value = float(value)
    if value.is_integer() and abs(value) < 2**53:
        return str(int(value))
    return repr(value)


def write_match_log(log: MatchLog, stream) -> None:
    """Write the CSV body of ``log``; derived counters are not written."""
    writer = csv.writer(stream, lineterminator="\n")
    with_outcome = log.victory_type is not None or log.peace is not None
    header = ["turn", *BASE_INDICATORS]
    if with_outcome:
        header += list(OUTCOME_COLUMNS)
    writer.writerow(header)
    for i in range(log.n_turns):
        row = [str(i + 1)] + [format_number(log.columns[name][i]) for name in BASE_INDICATORS]
        if with_outcome:
            row += [log.victory_type or "", "" if log.peace is None else str(log.peace)]
        writer.writerow(row)


def sidecar(log: MatchLog) -> dict:
    data = {
        "match_id": log.match_id,
        "agent_id": log.agent_id,
        "preference": log.preference.as_dict(),
        "outcome": log.outcome,
    }
    if log.opponent_match_id is not None:
        data["opponent_match_id"] = log.opponent_match_id
    if log.victory_type is not None:
        data["victory_type"] = log.victory_type
    if log.peace is not None:
        data["peace"] = log.peace
    return data


def save_match_log(log: MatchLog, directory) -> Path:
    """Write ``<match_id>.csv`` plus its ``<match_id>.json`` sidecar."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    path = directory / f"{log.match_id}.csv"
    with open(path, "w", encoding="utf-8", newline="") as fh:
        write_match_log(log, fh)
    with open(path.with_suffix(".json"), "w", encoding="utf-8") as fh:
        json.dump(sidecar(log), fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


def load_match_log(path, *, turn_bounds: tuple[int, int] | None = None) -> MatchLog:
    path = Path(path)
    meta_path = path.with_suffix(".json")
    meta = {}
    if meta_path.exists():
        with open(meta_path, encoding="utf-8") as fh:
            meta = json.load(fh)
    else:
        meta["match_id"] = path.stem
    with open(path, encoding="utf-8", newline="") as fh:
        return parse_match_log(fh, meta, turn_bounds=turn_bounds)


def load_logs(directory, *, turn_bounds: tuple[int, int] | None = None) -> list[MatchLog]:
    """Load every ``*.csv`` log in ``directory``, ordered by match id."""
    paths = sorted(Path(directory).glob("*.csv"))
    if not paths:
        logger.warning("no match logs found in %s", directory)
    return [load_match_log(p, turn_bounds=turn_bounds) for p in paths]


def check_pair(own: MatchLog, opp: MatchLog) -> None:
    """Raise :class:`PairingError` unless ``own`` and ``opp`` are partner logs."""
    if own.n_turns != opp.n_turns:
        raise PairingError(
            f"{own.match_id} has {own.n_turns} turns but opponent {opp.match_id} has {opp.n_turns}"
        )
    if own.opponent_match_id is not None and own.opponent_match_id != opp.match_id:
        raise PairingError(f"{own.match_id} is linked to {own.opponent_match_id}, not {opp.match_id}")
    if opp.opponent_match_id is not None and opp.opponent_match_id != own.match_id:
        raise PairingError(f"{opp.match_id} is linked to {opp.opponent_match_id}, not {own.match_id}")


def pair_logs(logs: Iterable[MatchLog]) -> list[tuple[MatchLog, MatchLog]]:
    """Return ``(own, opponent)`` tuples for every log, following the links."""
    by_id = {log.match_id: log for log in logs}
    pairs = []
    for log in by_id.values():
        if log.opponent_match_id is None or log.opponent_match_id not in by_id:
            raise PairingError(f"opponent log for {log.match_id} not found")
        opp = by_id[log.opponent_match_id]
        check_pair(log, opp)
        pairs.append((log, opp))
    return pairs
