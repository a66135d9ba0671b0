import io

import numpy as np
import pytest

from prefmodel.simulator import default_roster, generate_dataset
from prefmodel.telemetry import BASE_INDICATORS, MatchLog, PreferenceVector, derive_cumulatives, write_match_log


def make_log(n=20, match_id="m1", agent_id="a", levels=(5, 0, 0, 0, 0, 0), opponent=None, seed=0, **overrides):
    rng = np.random.default_rng(seed)
    columns = {name: rng.uniform(0, 50, n).round(3) for name in BASE_INDICATORS}
    columns["war"] = (rng.random(n) < 0.3).astype(float)
    columns["declared_war"] = columns["war"] * (rng.random(n) < 0.5)
    columns.update({k: np.asarray(v, dtype=float) for k, v in overrides.items()})
    log = MatchLog(
        match_id=match_id,
        agent_id=agent_id,
        preference=PreferenceVector.from_sequence(levels),
        columns=columns,
        opponent_match_id=opponent,
    )
    return derive_cumulatives(log)


def log_csv(log):
    buf = io.StringIO()
    write_match_log(log, buf)
    return buf.getvalue()


@pytest.fixture(scope="session")
def tiny_logs():
    """Six agents, one short game per pair: 15 matches, 30 logs."""
    return generate_dataset(default_roster(), games_per_pair=1, seed=3, turn_range=(130, 140))


# acceptance bookkeeping: one PASS/FAIL line per criterion that ran
ACCEPTANCE_LINES = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[n])
