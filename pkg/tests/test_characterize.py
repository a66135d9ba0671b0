import io

import numpy as np
import pytest
from scipy import stats

from prefmodel.characterize import (
    RegressionFit,
    average_by_turn,
    compare_agents,
    ols_fit,
    segment_fit,
    separation_from_intervals,
    separation_test,
    t_test,
    transform_root,
)
from prefmodel.errors import ContractError, DomainError, RankError, SampleSizeError, SelectionError

from conftest import make_log

X460 = np.arange(1, 461, dtype=float)


def test_exact_line():
    x = np.arange(10, dtype=float)
    fit = ols_fit(x, 2 + 3 * x)
    assert fit.b0 == pytest.approx(2) and fit.b1 == pytest.approx(3)
    assert fit.r_squared == 1.0


def test_matches_scipy_linregress():
    rng = np.random.default_rng(0)
    y = 0.5 * X460 + rng.normal(0, 20, 460)
    fit = ols_fit(X460, y, 0.95)
    ref = stats.linregress(X460, y)
    assert fit.b1 == pytest.approx(ref.slope)
    assert fit.se_b1 == pytest.approx(ref.stderr)
    assert fit.se_b0 == pytest.approx(ref.intercept_stderr)
    assert fit.r_squared == pytest.approx(ref.rvalue**2)
    assert fit.ci_b1 == pytest.approx(stats.t.ppf(0.975, 458) * ref.stderr)


def test_coverage_monte_carlo():
    hits = 0
    for seed in range(200):
        y = 1.7772 + 0.0183 * X460 + np.random.default_rng(seed).normal(0, 0.01, 460)
        lo, hi = ols_fit(X460, y, 0.99).interval("b1")
        hits += lo <= 0.0183 <= hi
    assert hits >= 190


def test_pure_noise_r_squared():
    small = sum(ols_fit(X460, np.random.default_rng(s).normal(0, 1, 460)).r_squared <= 0.05 for s in range(100))
    assert small >= 95


def test_ols_errors():
    with pytest.raises(RankError):
        ols_fit(np.ones(5), np.arange(5.0))
    with pytest.raises(SampleSizeError):
        ols_fit([1.0, 2.0], [1.0, 2.0])
    with pytest.raises(DomainError):
        ols_fit(X460, X460, confidence=0.8)


def test_piecewise_recovery():
    covered = [0, 0]
    for seed in range(100):
        y = np.where(X460 <= 220, 0.0314 * X460, 0.0314 * 220 + 0.0021 * (X460 - 220))
        y = y + np.random.default_rng(seed).normal(0, 0.05, 460)
        left, right = segment_fit(X460, y, 220, 0.99)
        covered[0] += left.interval("b1")[0] <= 0.0314 <= left.interval("b1")[1]
        covered[1] += right.interval("b1")[0] <= 0.0021 <= right.interval("b1")[1]
    assert min(covered) >= 95


def test_split_of_single_line_agrees():
    y = 1 + 0.2 * X460 + np.random.default_rng(1).normal(0, 0.5, 460)
    left, right = segment_fit(X460, y, 300, 0.99)
    assert separation_test(left, right, "b1").verdict == "overlapping"


def test_breakpoint_at_min_rejected():
    with pytest.raises(SampleSizeError):
        segment_fit(X460, X460, 1)


def interval_fit(c, h, confidence=0.99):
    return RegressionFit(b0=0, b1=c, r_squared=1, ci_b0=0, ci_b1=h, confidence=confidence, n=460,
                         residual_variance=0, se_b0=0, se_b1=h / 2.6)


def test_separation_verdicts():
    assert separation_from_intervals((1, 2), (3, 4)) == "separated"
    assert separation_from_intervals((1, 3), (2, 4)) == "overlapping"
    assert separation_test(interval_fit(0.0183, 7e-6), interval_fit(0.0194, 9e-6)).verdict == "separated"
    with pytest.raises(ContractError):
        separation_test(interval_fit(1, 1), interval_fit(2, 1, confidence=0.95))


def test_transform_root():
    np.testing.assert_allclose(transform_root([0, 1, 32], 5), [0, 1, 2])
    np.testing.assert_allclose(transform_root([16], 4), [2])
    with pytest.raises(DomainError, match="turn index 2"):
        transform_root([1, -1], 2)


def test_average_by_turn():
    logs = [make_log(10, match_id="a", seed=0), make_log(10, match_id="b", seed=0)]
    np.testing.assert_array_equal(average_by_turn(logs, "culture"), logs[0].series("culture"))
    c1 = np.zeros(10)
    c1[6] = 2
    pair = [make_log(10, culture=c1), make_log(10, culture=2 * c1)]
    assert average_by_turn(pair, "Culture")[6] == 3
    with pytest.raises(SelectionError):
        average_by_turn(pair, "culture", subset="victory")


def test_t_test_paired_and_welch():
    a = np.array([0.7, 0.72, 0.69, 0.71])
    b = a - 0.05
    assert t_test(a, b).significant
    res = t_test(a, a + np.array([0.01, -0.01, 0.02, -0.02]), paired=False)
    assert not res.significant


def test_compare_agents_report(tmp_path):
    from prefmodel.simulator import default_roster, simulate_match

    roster = {a.agent_id: a for a in default_roster()}
    logs = []
    for s in range(6):
        logs += simulate_match(roster["alexander"], roster["hatshepsut"], 300, s, match_id=f"m{s:02d}")
    report = compare_agents(logs, "alexander", "hatshepsut", "culture", transform="root5")
    assert report.verdicts[0]["b1"].verdict == "separated"
    buf = io.StringIO()
    report.write_csv(buf)
    rows = buf.getvalue().splitlines()
    assert rows[0] == "indicator,agent,interval,result,r_squared,b0,b1,confidence"
    assert rows[1].startswith("root5(Culture),alexander,[1:300],General,")
    seg = compare_agents(logs, "alexander", "hatshepsut", "cities", breakpoint=220)
    assert [r[2] for r in seg.rows()] == ["[1:220]", "[221:300]"] * 2
