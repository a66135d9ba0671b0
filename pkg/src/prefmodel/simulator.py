"""Synthetic 1v1 matches whose indicator curves are driven by preference levels.

The dynamics are stylized curves, not a game engine.  Each governed
indicator has a planted slope that grows with the level of its preference:

* Culture follows ``(a + b t)^5`` and CultureRate ``(a' + b' t)^4``; level 0
  and level 5 reproduce the fitted curves of a culture-neutral and a
  culture-loving leader.
* Cities, Land and Plots rise quickly until a breakpoint and then level off;
  the early slope grows with Growth.
* Units, Power and Industry grow with Military; Techs and ResearchRate with
  Science; Gold, GoldRate and Economy with Gold, the latter only barely so
  that Gold stays the hard preference to recover.
* Each turn the player at peace declares war with a probability that rises
  with Military and falls with Culture and Religion; wars end at a fixed
  per-turn rate.

Noise is an AR(1) series per indicator, so turn-to-turn differences stay
informative, plus a small per-match slope jitter on the indicators that
are not anchored to reference fits.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from types import MappingProxyType
from typing import Mapping, Sequence

import numpy as np
from scipy.signal import lfilter

from .errors import DomainError
from .sampling import make_rng
from .telemetry import (
    BASE_INDICATORS,
    DEFAULT_TURN_BOUNDS,
    PREFERENCES,
    MatchLog,
    PreferenceVector,
    derive_cumulatives,
)

# Two reference leaders: level 0 and level 5 culture curves on the root scale.
CULTURE_ROOT5 = {"a": (1.7772, 2.1366), "b": (0.0183, 0.0194)}
CULTURE_RATE_ROOT4 = {"a": (1.0939, 1.3567), "b": (0.0096, 0.0101)}
# Early Cities slope: growth level 0 and level 2.
CITIES_EARLY_SLOPE = (0.0296, 0.03143)
CITIES_LATE_SLOPE = (0.0018, 0.0021)
GROWTH_BREAKPOINT = 220
# GoldRate slope: the two reference fits overlap, so the level barely matters.
GOLD_RATE_SLOPE = (0.3419, 0.3853)
WAR_END_RATE = 0.08


def _lerp(pair, level, top=5):
    lo, hi = pair
    return lo + (hi - lo) * level / top


def default_dynamics(pref: PreferenceVector) -> dict[str, dict[str, float]]:
    """Planted coefficients for every indicator, as a function of the levels."""
    cul, gold, gro, mil, rel, sci = pref.as_tuple()
    return {
        "culture": {
            "a": _lerp(CULTURE_ROOT5["a"], cul),
            "b": _lerp(CULTURE_ROOT5["b"], cul),
            "sigma": 0.01,
        },
        "culture_rate": {
            "a": _lerp(CULTURE_RATE_ROOT4["a"], cul),
            "b": _lerp(CULTURE_RATE_ROOT4["b"], cul),
            "sigma": 0.01,
        },
        "cities": {
            "a": 0.5,
            "b": _lerp(CITIES_EARLY_SLOPE, gro, top=2),
            "b_late": _lerp(CITIES_LATE_SLOPE, gro, top=2),
            "breakpoint": GROWTH_BREAKPOINT,
            "sigma": 0.3,
        },
        "land": {"a": 8.0, "b": 0.45 + 0.06 * gro, "b_late": 0.008 + 0.002 * gro, "breakpoint": 200, "sigma": 2.0},
        "plots": {"a": 5.0, "b": 0.80 + 0.10 * gro, "b_late": 0.10 + 0.005 * gro, "breakpoint": 200, "sigma": 3.0},
        "population": {"a": 1.0, "b": 0.010 + 0.003 * gro, "sigma": 0.5},
        "agriculture": {"a": 5.0, "b": 0.50 + 0.12 * gro, "sigma": 3.0},
        "units": {"a": 3.0, "b": 0.040 + 0.02 * mil, "sigma": 1.0},
        "power": {"a": 10.0, "b": 0.60 + 0.30 * mil, "sigma": 4.0},
        "industry": {"a": 5.0, "b": 0.50 + 0.10 * mil, "sigma": 3.0},
        "techs": {"a": 1.0, "b": 0.12 + 0.02 * sci, "sigma": 0.6},
        "research_rate": {"a": 2.0, "b": 0.25 + 0.10 * sci, "sigma": 3.0},
        "economy": {"a": 5.0, "b": 0.50 + 0.006 * gold + 0.05 * sci, "sigma": 4.0},
        "gold": {
            "a": 40.0,
            "b": 0.28 + 0.004 * gold,
            "b_late": 3.6 + 0.1 * gold,
            "breakpoint": 300 + 8 * gold,
            "sigma": 60.0,
        },
        "gold_rate": {"a": -15.0, "b": _lerp(GOLD_RATE_SLOPE, gold), "sigma": 25.0},
        "maintenance": {"a": 0.5, "b": 0.004, "sigma": 0.5},
        "religion": {
            "adopt_turn": 80.0 - 12.0 * rel if rel else 320.0,
            "adopt_spread": 40.0 - 6.0 * rel if rel else 150.0,
            "shared": 0.9,
        },
        "war": {"declare": 0.004 * (1.0 + 0.5 * mil) * math.exp(-0.25 * cul - 0.12 * rel)},
    }


# Indicators whose early slope ``b`` is planted as increasing in one preference.
GOVERNED = {
    "culture": "culture",
    "culture_rate": "culture",
    "cities": "growth",
    "land": "growth",
    "plots": "growth",
    "population": "growth",
    "agriculture": "growth",
    "units": "military",
    "power": "military",
    "industry": "military",
    "techs": "science",
    "research_rate": "science",
    "gold": "gold",
    "gold_rate": "gold",
}
# Planted but buried in noise: fitted slopes from different levels overlap.
OVERLAPPING = frozenset({"gold", "gold_rate"})


@dataclass(frozen=True)
class AgentSpec:
    agent_id: str
    preference: PreferenceVector
    dynamics: Mapping[str, Mapping[str, float]] = field(default_factory=dict)
    seed: int = 0

    def planted_slope(self, indicator: str) -> float:
        return float(self.dynamics[indicator]["b"])


def make_agent(preference: PreferenceVector, seed: int = 0, agent_id: str | None = None) -> AgentSpec:
    """Build an agent whose dynamics follow its preference levels.

    ``seed`` gives the agent a persistent style: the intercepts of the
    ungoverned score components are jittered by a few percent.
    """
    if not isinstance(preference, PreferenceVector):
        preference = PreferenceVector.from_sequence(preference)
    dyn = default_dynamics(preference)
    rng = make_rng(seed)
    for name in ("economy", "industry", "agriculture", "maintenance"):
        dyn[name]["a"] *= float(1.0 + 0.05 * rng.standard_normal())
    frozen = MappingProxyType({k: MappingProxyType(dict(v)) for k, v in dyn.items()})
    if agent_id is None:
        agent_id = "agent-" + "".join(str(v) for v in preference.as_tuple()) + f"-{seed}"
    return AgentSpec(agent_id, preference, frozen, seed)


def _ar1(rng, n, sigma, phi=0.995):
    """Stationary AR(1) noise with marginal standard deviation ``sigma``."""
    eta = rng.standard_normal(n) * sigma * math.sqrt(1.0 - phi * phi)
    eta[0] = rng.standard_normal() * sigma
    return lfilter([1.0], [1.0, -phi], eta)


def _two_segment(t, d):
    bp = d["breakpoint"]
    return d["a"] + d["b"] * np.minimum(t, bp) + d["b_late"] * np.maximum(t - bp, 0.0)


def _indicator_curves(agent: AgentSpec, n: int, rng) -> dict[str, np.ndarray]:
    d = agent.dynamics
    t = np.arange(1, n + 1, dtype=float)
    jitter = lambda: float(1.0 + 0.01 * rng.standard_normal())  # noqa: E731
    out = {}

    # Anchored indicators carry no per-match coefficient jitter so that
    # averages over a leader's matches settle on the reference fits.
    for name, power in (("culture", 5), ("culture_rate", 4)):
        p = d[name]
        root = p["a"] + p["b"] * t + _ar1(rng, n, p["sigma"], phi=0.9)
        out[name] = np.maximum(root, 0.0) ** power

    for name in ("cities", "land", "plots"):
        p = dict(d[name])
        if name != "cities":
            p["b"] *= jitter()
        curve = _two_segment(t, p) + _ar1(rng, n, p["sigma"], phi=0.5 if name == "cities" else 0.995)
        # Cities can be lost; territory only grows.
        curve = np.maximum(curve, 0.0) if name == "cities" else np.maximum.accumulate(np.maximum(curve, 1.0))
        out[name] = np.round(curve)

    p = d["population"]
    out["population"] = np.round(np.maximum(out["cities"] * (p["a"] + p["b"] * jitter() * t) + _ar1(rng, n, p["sigma"]), 1.0))

    for name in ("agriculture", "power", "industry", "research_rate", "economy", "gold_rate"):
        p = d[name]
        out[name] = p["a"] + p["b"] * jitter() * t + _ar1(rng, n, p["sigma"])

    p = d["units"]
    out["units"] = np.round(np.maximum(p["a"] + p["b"] * jitter() * t + _ar1(rng, n, p["sigma"]), 1.0))
    p = d["techs"]
    techs = p["a"] + p["b"] * jitter() * t + _ar1(rng, n, p["sigma"])
    out["techs"] = np.round(np.maximum.accumulate(np.clip(techs, 0.0, 100.0)))

    p = dict(d["gold"])
    p["b"] *= jitter()
    out["gold"] = np.maximum(_two_segment(t, p) + _ar1(rng, n, p["sigma"], phi=0.9), 0.0)

    p = d["maintenance"]
    out["maintenance"] = np.maximum(0.5 * out["cities"] * (1.0 + p["b"] * t) + _ar1(rng, n, p["sigma"]), 0.0)
    out["score"] = np.round(
        2.0 * out["cities"] + 0.5 * out["population"] + 3.0 * out["techs"] + 0.05 * out["land"]
        + 0.001 * out["culture"] + _ar1(rng, n, 4.0)
    )
    return out


def _religion(agent: AgentSpec, n: int, rng) -> tuple[float, bool]:
    """Turn at which a state religion is adopted (inf = never) and whether it is self-founded."""
    p = agent.dynamics["religion"]
    turn = p["adopt_turn"] + rng.exponential(max(p["adopt_spread"], 1.0))
    return (turn if turn <= n else math.inf), agent.preference.religion > 0


def _wars(a: AgentSpec, b: AgentSpec, n: int, rng):
    war = np.zeros(n)
    declared = (np.zeros(n), np.zeros(n))
    rates = (a.dynamics["war"]["declare"], b.dynamics["war"]["declare"])
    at_war = False
    for i in range(n):
        u = rng.random(3)
        if at_war:
            if u[0] < WAR_END_RATE:
                at_war = False
        else:
            if u[1] < rates[0]:
                declared[0][i] = 1.0
                at_war = True
            elif u[2] < rates[1]:
                declared[1][i] = 1.0
                at_war = True
        war[i] = 1.0 if at_war else 0.0
    return war, declared


def _victory_type(winner: AgentSpec, n_turns: int, max_turns: int) -> str:
    if n_turns >= max_turns:
        return "time"
    pref = winner.preference
    by_pref = {
        "culture": "cultural",
        "military": "conquest",
        "science": "space_race",
        "growth": "domination",
        "gold": "diplomatic",
        "religion": "diplomatic",
    }
    top = max(PREFERENCES, key=lambda p: (pref[p], -PREFERENCES.index(p)))
    return by_pref[top] if pref[top] > 0 else "time"


def simulate_match(
    a: AgentSpec,
    b: AgentSpec,
    turns: int,
    seed: int,
    *,
    match_id: str = "m0000",
    turn_bounds: tuple[int, int] | None = DEFAULT_TURN_BOUNDS,
) -> tuple[MatchLog, MatchLog]:
    """Play one game; returns the two partner logs ``(log_a, log_b)``.

    Log ids are ``<match_id>a`` and ``<match_id>b``.  Pass
    ``turn_bounds=None`` to allow lengths outside the default range.
    """
    if turn_bounds is not None and not turn_bounds[0] <= turns <= turn_bounds[1]:
        raise DomainError(f"turns={turns} outside {turn_bounds}")
    if turns < 6:
        raise DomainError(f"turns={turns} too short")
    rng = make_rng(seed)
    curves = (_indicator_curves(a, turns, rng), _indicator_curves(b, turns, rng))
    war, declared = _wars(a, b, turns, rng)

    rel = (_religion(a, turns, rng), _religion(b, turns, rng))
    # Founders keep their own faith; the others convert, often to the
    # opponent's.
    religion_ids = [f"own{k}" if math.isfinite(adopt) and founded else None for k, (adopt, founded) in enumerate(rel)]
    for k, (adopt, founded) in enumerate(rel):
        if math.isfinite(adopt) and not founded:
            shared = rng.random() < (a, b)[k].dynamics["religion"]["shared"]
            religion_ids[k] = (religion_ids[1 - k] or "common") if shared else f"other{k}"
    t = np.arange(1, turns + 1)
    diffs = []
    for k in (0, 1):
        adopt_k, adopt_o = rel[k][0], rel[1 - k][0]
        has_k = t >= adopt_k
        has_o = t >= adopt_o
        differs = religion_ids[k] != religion_ids[1 - k]
        diffs.append((has_k & (~has_o | differs)).astype(float))

    final = [c["score"][-1] for c in curves]
    noisy = [s * (1.0 + 0.1 * rng.standard_normal()) for s in final]
    a_wins = noisy[0] > noisy[1]
    max_turns = turn_bounds[1] if turn_bounds is not None else DEFAULT_TURN_BOUNDS[1]
    vtype = _victory_type(a if a_wins else b, turns, max_turns)
    peace = int(war[-1] == 0)

    logs = []
    ids = (match_id + "a", match_id + "b")
    for k, agent in enumerate((a, b)):
        cols = dict(curves[k])
        cols["war"] = war
        cols["declared_war"] = declared[k]
        cols["state_religion_diff"] = diffs[k]
        won = a_wins if k == 0 else not a_wins
        log = MatchLog(
            match_id=ids[k],
            agent_id=agent.agent_id,
            preference=agent.preference,
            columns={name: cols[name] for name in BASE_INDICATORS},
            opponent_match_id=ids[1 - k],
            outcome="victory" if won else "defeat",
            victory_type=vtype,
            peace=peace,
        )
        logs.append(derive_cumulatives(log))
    return logs[0], logs[1]


def generate_dataset(
    roster: Sequence[AgentSpec],
    games_per_pair: int = 8,
    seed: int = 0,
    *,
    turn_range: tuple[int, int] = DEFAULT_TURN_BOUNDS,
    prefix: str = "m",
) -> list[MatchLog]:
    """Round-robin over unordered agent pairs, ``games_per_pair`` games each.

    Game lengths are drawn uniformly from ``turn_range``.  Returns both logs
    of every game, ordered by match id.
    """
    if len(roster) < 2:
        raise DomainError(f"need at least two agents, got {len(roster)}")
    ids = [a.agent_id for a in roster]
    if len(set(ids)) != len(ids):
        raise DomainError("agent ids must be unique")
    rng = make_rng(seed)
    logs = []
    game = 0
    for a, b in itertools.combinations(roster, 2):
        for _ in range(games_per_pair):
            turns = int(rng.integers(turn_range[0], turn_range[1] + 1))
            game_seed = int(rng.integers(0, 2**63 - 1))
            logs.extend(
                simulate_match(a, b, turns, game_seed, match_id=f"{prefix}{game:04d}", turn_bounds=turn_range)
            )
            game += 1
    return logs


# Reference rosters.  The first mirrors the leaders discussed for
# characterization; the second shares no agent with it.  In each roster
# every preference except Culture has one level-5 and one level-2 agent;
# the unknown roster has no culture lover, so Culture there is a test of
# false positives.
TRADITIONAL_ROSTER = (
    ("alexander", (0, 0, 2, 5, 0, 0)),
    ("hatshepsut", (5, 0, 0, 0, 2, 0)),
    ("louis_xiv", (2, 5, 0, 0, 0, 0)),
    ("mansa_musa", (0, 0, 0, 2, 5, 0)),
    ("tokugawa", (0, 0, 5, 0, 0, 2)),
    ("elizabeth", (0, 0, 0, 0, 0, 5)),
)
ALTERNATIVE_ROSTER = (
    ("ramesses", (0, 0, 0, 2, 5, 0)),
    ("montezuma", (0, 0, 0, 5, 2, 0)),
    ("napoleon", (0, 0, 0, 2, 0, 0)),
    ("qin_shi_huang", (0, 2, 5, 0, 0, 0)),
    ("victoria", (0, 5, 0, 0, 0, 2)),
    ("mao_zedong", (0, 0, 2, 0, 0, 5)),
)


def default_roster(alternative: bool = False, seed: int = 0) -> list[AgentSpec]:
    table = ALTERNATIVE_ROSTER if alternative else TRADITIONAL_ROSTER
    offset = 1000 if alternative else 0
    return [
        make_agent(PreferenceVector.from_sequence(levels), seed=seed + offset + i, agent_id=name)
        for i, (name, levels) in enumerate(table)
    ]


def load_roster(path) -> list[AgentSpec]:
    """Roster file: ``{"agents": [{"agent_id": ..., "preference": {...}, "seed": 0}, ...]}``."""
    with open(path, encoding="utf-8") as fh:
        data = json.load(fh)
    agents = []
    for i, entry in enumerate(data["agents"]):
        pref = entry["preference"]
        pref = PreferenceVector.from_dict(pref) if isinstance(pref, dict) else PreferenceVector.from_sequence(pref)
        agents.append(make_agent(pref, seed=int(entry.get("seed", i)), agent_id=entry.get("agent_id")))
    return agents


def roster_to_json(roster: Sequence[AgentSpec]) -> str:
    return json.dumps(
        {"agents": [{"agent_id": a.agent_id, "preference": a.preference.as_dict(), "seed": a.seed} for a in roster]},
        indent=2,
    )


def write_dataset(logs: Sequence[MatchLog], directory) -> list[Path]:
    from .telemetry import save_match_log

    return [save_match_log(log, directory) for log in logs]
