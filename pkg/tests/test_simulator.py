import json
from collections import Counter

import numpy as np
import pytest

from prefmodel.characterize import ols_fit
from prefmodel.errors import DomainError
from prefmodel.sampling import make_rng
from prefmodel.simulator import (
    GOVERNED,
    OVERLAPPING,
    _indicator_curves,
    default_dynamics,
    default_roster,
    generate_dataset,
    load_roster,
    make_agent,
    roster_to_json,
    simulate_match,
    write_dataset,
)
from prefmodel.telemetry import PREFERENCES, PreferenceVector, load_logs, pair_logs

T = np.arange(1, 461, dtype=float)


def agent(levels, seed=0, agent_id=None):
    return make_agent(PreferenceVector.from_sequence(levels), seed, agent_id)


def test_dataset_counts():
    logs = generate_dataset(default_roster(), games_per_pair=8, seed=0)
    assert len(logs) == 240
    assert len({log.match_id for log in logs}) == 240
    assert set(Counter(log.agent_id for log in logs).values()) == {40}
    assert len(pair_logs(logs)) == 240
    assert all(240 <= log.n_turns <= 460 for log in logs)


def test_two_agents_one_game():
    logs = generate_dataset(default_roster()[:2], games_per_pair=1, seed=0)
    assert len(logs) == 2
    assert {log.outcome for log in logs} == {"victory", "defeat"}
    assert logs[0].victory_type == logs[1].victory_type


def test_roster_errors():
    with pytest.raises(DomainError):
        generate_dataset(default_roster()[:1])
    a = agent((5, 0, 0, 0, 0, 0), agent_id="same")
    with pytest.raises(DomainError):
        generate_dataset([a, a])


def test_alternative_roster_is_disjoint():
    known = {a.agent_id for a in default_roster()}
    unknown = {a.agent_id for a in default_roster(alternative=True)}
    assert len(known) == len(unknown) == 6
    assert known.isdisjoint(unknown)


def test_determinism():
    a, b = default_roster()[:2]
    first = simulate_match(a, b, 300, seed=9)
    second = simulate_match(a, b, 300, seed=9)
    for x, y in zip(first, second):
        assert x == y
    other = simulate_match(a, b, 300, seed=10)
    assert not np.array_equal(first[0].series("gold"), other[0].series("gold"))


def test_turn_bounds():
    a, b = default_roster()[:2]
    assert all(log.n_turns == 240 for log in simulate_match(a, b, 240, seed=0))
    with pytest.raises(DomainError):
        simulate_match(a, b, 239, seed=0)


def test_level_zero_uses_base_anchors():
    dyn = default_dynamics(PreferenceVector.from_sequence((0,) * 6))
    assert dyn["culture"]["b"] == 0.0183
    assert dyn["culture_rate"]["a"] == 1.0939
    assert dyn["cities"]["b"] == 0.0296
    assert dyn["gold_rate"]["b"] == 0.3419


def averaged_slope(ag, indicator, seed, matches=40):
    rng = make_rng(seed)
    avg = np.mean([_indicator_curves(ag, 460, rng)[indicator] for _ in range(matches)], axis=0)
    root = {"culture": 5, "culture_rate": 4}.get(indicator)
    if root:
        avg = avg ** (1 / root)
    bp = int(ag.dynamics[indicator].get("breakpoint", 460))
    return ols_fit(T[:bp], avg[:bp]).b1


def test_culture_level_orders_root_slope():
    strong = averaged_slope(agent((5, 0, 0, 0, 0, 0)), "culture", 1)
    none = averaged_slope(agent((0, 0, 0, 0, 0, 0)), "culture", 1)
    assert strong > none


@pytest.mark.parametrize("indicator", sorted(set(GOVERNED) - OVERLAPPING))
def test_governed_slopes_are_monotone(indicator):
    pref = PREFERENCES.index(GOVERNED[indicator])
    for trial in range(5):
        slopes = []
        for level in (0, 2, 5):
            levels = [0] * 6
            levels[pref] = level
            slopes.append(averaged_slope(agent(levels, trial), indicator, trial * 10 + level))
        assert slopes[0] < slopes[1] < slopes[2], slopes


def test_culture_fit_near_anchor():
    a, b = agent((0, 0, 2, 5, 0, 0), 1, "a"), agent((5, 0, 0, 0, 2, 0), 2, "h")
    logs = [simulate_match(a, b, 460, s, match_id=f"m{s:03d}") for s in range(40)]
    for side, (b0, b1) in ((0, (1.7772, 0.0183)), (1, (2.1366, 0.0194))):
        avg = np.mean([pair[side].series("culture") for pair in logs], axis=0) ** 0.2
        fit = ols_fit(T, avg, 0.99)
        assert abs(fit.b1 - b1) < 2e-5
        assert abs(fit.b0 - b0) < 5e-3
        assert fit.r_squared > 0.99


def test_roster_json_round_trip(tmp_path):
    path = tmp_path / "roster.json"
    path.write_text(roster_to_json(default_roster()))
    assert load_roster(path) == default_roster()
    path.write_text(json.dumps({"agents": [{"agent_id": "x", "preference": [5, 0, 0, 0, 0, 0], "seed": 3}]}))
    assert load_roster(path)[0].preference["culture"] == 5


def test_written_dataset_reloads(tmp_path):
    logs = generate_dataset(default_roster()[:3], games_per_pair=1, seed=2)
    write_dataset(logs, tmp_path)
    back = load_logs(tmp_path)
    assert sorted(back, key=lambda l: l.match_id) == sorted(logs, key=lambda l: l.match_id)
