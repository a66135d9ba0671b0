"""Regression toolkit for characterizing agents from their indicator curves.

Typical use: average an indicator per turn over all of an agent's matches,
optionally take a k-th root to straighten a polynomial curve, fit a line
(or two lines either side of a breakpoint), and check whether two agents'
coefficients have disjoint confidence intervals.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping

import numpy as np
from scipy import stats

from .errors import ContractError, DomainError, RankError, SampleSizeError, SelectionError
from .telemetry import BASE_INDICATORS, DERIVED_INDICATORS, MatchLog

CONFIDENCE_LEVELS = (0.90, 0.95, 0.99)
SUBSETS = ("general", "victory", "defeat")
COEFFICIENTS = ("b0", "b1")


def _check_confidence(confidence: float) -> float:
    for level in CONFIDENCE_LEVELS:
        if math.isclose(confidence, level):
            return level
    raise DomainError(f"confidence must be one of {CONFIDENCE_LEVELS}, got {confidence}")


def indicator_key(name: str) -> str:
    """Accept ``CultureRate`` or ``culture_rate``; return the log column name."""
    if name in BASE_INDICATORS or name in DERIVED_INDICATORS:
        return name
    snake = "".join("_" + c.lower() if c.isupper() else c for c in name).lstrip("_")
    if snake in BASE_INDICATORS or snake in DERIVED_INDICATORS:
        return snake
    raise DomainError(f"unknown indicator {name!r}")


def t_quantile(confidence: float, df: int) -> float:
    return float(stats.t.ppf(0.5 + confidence / 2.0, df))


@dataclass(frozen=True)
class RegressionFit:
    """Least-squares line ``y = b0 + b1 x`` with Student-t intervals."""

    b0: float
    b1: float
    r_squared: float
    ci_b0: float  # half-width
    ci_b1: float
    confidence: float
    n: int
    residual_variance: float
    se_b0: float
    se_b1: float
    x_min: float = float("nan")
    x_max: float = float("nan")

    def coefficient(self, name: str) -> float:
        return {"b0": self.b0, "b1": self.b1}[name]

    def half_width(self, name: str) -> float:
        return {"b0": self.ci_b0, "b1": self.ci_b1}[name]

    def standard_error(self, name: str) -> float:
        return {"b0": self.se_b0, "b1": self.se_b1}[name]

    def interval(self, name: str) -> tuple[float, float]:
        c, h = self.coefficient(name), self.half_width(name)
        return c - h, c + h


def ols_fit(x, y, confidence: float = 0.95) -> RegressionFit:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    confidence = _check_confidence(confidence)
    n = x.shape[0]
    if y.shape[0] != n:
        raise DomainError(f"x has {n} points but y has {y.shape[0]}")
    if n < 3:
        raise SampleSizeError(f"need at least 3 points, got {n}")
    x_mean = x.mean()
    y_mean = y.mean()
    dx = x - x_mean
    sxx = float(dx @ dx)
    if sxx <= 0.0 or np.ptp(x) == 0.0:
        raise RankError("x is constant")
    b1 = float(dx @ (y - y_mean)) / sxx
    b0 = float(y_mean - b1 * x_mean)
    resid = y - (b0 + b1 * x)
    sse = float(resid @ resid)
    sst = float(((y - y_mean) ** 2).sum())
    r2 = 1.0 - sse / sst if sst > 0 else 1.0
    s2 = sse / (n - 2)
    se_b1 = math.sqrt(s2 / sxx)
    se_b0 = math.sqrt(s2 * (1.0 / n + x_mean**2 / sxx))
    q = t_quantile(confidence, n - 2)
    return RegressionFit(
        b0=b0,
        b1=b1,
        r_squared=min(max(r2, 0.0), 1.0),
        ci_b0=q * se_b0,
        ci_b1=q * se_b1,
        confidence=confidence,
        n=n,
        residual_variance=s2,
        se_b0=se_b0,
        se_b1=se_b1,
        x_min=float(x.min()),
        x_max=float(x.max()),
    )


def segment_fit(x, y, breakpoint: float, confidence: float = 0.95) -> tuple[RegressionFit, RegressionFit]:
    """Independent fits on ``x <= breakpoint`` and ``x > breakpoint``."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    left = x <= breakpoint
    right = ~left
    for name, mask in (("left", left), ("right", right)):
        if mask.sum() < 3:
            raise SampleSizeError(f"{name} segment at breakpoint {breakpoint} has {int(mask.sum())} points")
    return ols_fit(x[left], y[left], confidence), ols_fit(x[right], y[right], confidence)


def transform_root(series, k: int) -> np.ndarray:
    """Element-wise k-th root of a non-negative series."""
    if int(k) != k or k < 2:
        raise DomainError(f"root order must be an integer >= 2, got {k}")
    series = np.asarray(series, dtype=float)
    negative = np.flatnonzero(series < 0)
    if negative.size:
        i = int(negative[0])
        raise DomainError(f"negative value {series[i]} at turn index {i + 1}; cannot take root {k}")
    return series ** (1.0 / k)


def parse_transform(spec: str | None) -> int | None:
    """``"root5"`` -> 5; ``None``, ``""`` or ``"none"`` -> no transform."""
    if spec in (None, "", "none", "identity"):
        return None
    if isinstance(spec, str) and spec.startswith("root"):
        return int(spec[4:])
    raise DomainError(f"unknown transform {spec!r}")


def select_subset(logs: Iterable[MatchLog], subset: str = "general") -> list[MatchLog]:
    if subset not in SUBSETS:
        raise DomainError(f"subset must be one of {SUBSETS}, got {subset!r}")
    logs = list(logs)
    if subset == "general":
        return logs
    return [log for log in logs if log.outcome == subset]


def average_by_turn(logs: Iterable[MatchLog], indicator: str, subset: str = "general") -> np.ndarray:
    """Per-turn mean of ``indicator`` over the selected matches of one agent.

    The result covers turns ``1..min(n_turns)`` so every point averages the
    same set of matches.
    """
    key = indicator_key(indicator)
    chosen = select_subset(logs, subset)
    if not chosen:
        raise SelectionError(f"no matches in subset {subset!r}")
    agents = {log.agent_id for log in chosen}
    if len(agents) > 1:
        raise DomainError(f"logs from several agents: {sorted(agents)}")
    n = min(log.n_turns for log in chosen)
    stacked = np.vstack([log.series(key)[:n] for log in chosen])
    return stacked.mean(axis=0)


@dataclass(frozen=True)
class TTestResult:
    statistic: float
    df: float
    p_value: float
    confidence: float

    @property
    def significant(self) -> bool:
        return self.p_value < 1.0 - self.confidence


def t_test(a, b, confidence: float = 0.95, paired: bool = True) -> TTestResult:
    """Two-sided t-test of equal means; paired by position unless ``paired=False``."""
    confidence = _check_confidence(confidence)
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if paired:
        if a.shape != b.shape:
            raise DomainError("paired samples must have equal length")
        d = a - b
        if np.allclose(d, d[0]):
            return TTestResult(0.0 if d[0] == 0 else math.copysign(math.inf, d[0]), len(d) - 1, float(d[0] == 0), confidence)
        res = stats.ttest_rel(a, b)
        df = len(a) - 1
    else:
        res = stats.ttest_ind(a, b, equal_var=False)
        va, vb = a.var(ddof=1) / len(a), b.var(ddof=1) / len(b)
        df = (va + vb) ** 2 / (va**2 / (len(a) - 1) + vb**2 / (len(b) - 1))
    return TTestResult(float(res.statistic), float(df), float(res.pvalue), confidence)


@dataclass(frozen=True)
class SeparationResult:
    coefficient: str
    confidence: float
    separated: bool
    interval_a: tuple[float, float]
    interval_b: tuple[float, float]
    t_statistic: float
    df: float
    p_value: float

    @property
    def verdict(self) -> str:
        return "separated" if self.separated else "overlapping"


def intervals_disjoint(a: tuple[float, float], b: tuple[float, float]) -> bool:
    return a[1] < b[0] or b[1] < a[0]


def separation_test(fit_a: RegressionFit, fit_b: RegressionFit, coefficient: str = "b1", confidence: float | None = None) -> SeparationResult:
    """Compare one coefficient of two fits.

    The verdict is CI disjointness.  A Welch-style statistic
    ``(c_a - c_b) / sqrt(se_a^2 + se_b^2)`` is reported alongside.
    """
    if coefficient not in COEFFICIENTS:
        raise DomainError(f"coefficient must be one of {COEFFICIENTS}")
    if not math.isclose(fit_a.confidence, fit_b.confidence):
        raise ContractError(f"fits use different confidence levels: {fit_a.confidence} vs {fit_b.confidence}")
    if confidence is not None and not math.isclose(confidence, fit_a.confidence):
        raise ContractError(f"fits were computed at {fit_a.confidence}, not {confidence}")
    ia, ib = fit_a.interval(coefficient), fit_b.interval(coefficient)
    se_a, se_b = fit_a.standard_error(coefficient), fit_b.standard_error(coefficient)
    diff = fit_a.coefficient(coefficient) - fit_b.coefficient(coefficient)
    se = math.hypot(se_a, se_b)
    if se > 0:
        t_stat = diff / se
        va, vb = se_a**2, se_b**2
        df = (va + vb) ** 2 / (va**2 / (fit_a.n - 2) + vb**2 / (fit_b.n - 2))
        p = float(2.0 * stats.t.sf(abs(t_stat), df))
    else:
        t_stat = 0.0 if diff == 0 else math.copysign(math.inf, diff)
        df = float(fit_a.n + fit_b.n - 4)
        p = 1.0 if diff == 0 else 0.0
    return SeparationResult(coefficient, fit_a.confidence, intervals_disjoint(ia, ib), ia, ib, float(t_stat), float(df), p)


def separation_from_intervals(a: tuple[float, float], b: tuple[float, float]) -> str:
    return "separated" if intervals_disjoint(a, b) else "overlapping"


@dataclass
class CharacterizationReport:
    indicator: str
    agents: tuple[str, str]
    transform: str | None
    subset: str
    confidence: float
    intervals: dict[str, list[tuple[int, int]]]  # per agent, turn ranges
    fits: dict[str, list[RegressionFit]]
    verdicts: list[dict[str, SeparationResult]] = field(default_factory=list)

    def indicator_label(self) -> str:
        k = parse_transform(self.transform)
        base = "".join(p.capitalize() for p in indicator_key(self.indicator).split("_"))
        return base if k is None else f"root{k}({base})"

    def rows(self) -> list[list[str]]:
        """Rows in the column layout of a regression summary table."""
        out = []
        for agent in self.agents:
            for (lo, hi), fit in zip(self.intervals[agent], self.fits[agent]):
                out.append(
                    [
                        self.indicator_label(),
                        agent,
                        f"[{lo}:{hi}]",
                        self.subset.capitalize(),
                        f"{100 * fit.r_squared:.2f}%",
                        f"{fit.b0:.4f} (±{fit.ci_b0:.4g})",
                        f"{fit.b1:.4f} (±{fit.ci_b1:.4g})",
                        f"{round(100 * fit.confidence)}%",
                    ]
                )
        return out

    HEADER = ("indicator", "agent", "interval", "result", "r_squared", "b0", "b1", "confidence")

    def write_csv(self, stream, header: bool = True) -> None:
        writer = csv.writer(stream, lineterminator="\n")
        if header:
            writer.writerow(self.HEADER)
        writer.writerows(self.rows())


def _fit_agent(series, breakpoint, confidence):
    x = np.arange(1, len(series) + 1, dtype=float)
    n = len(series)
    if breakpoint is None:
        return [(1, n)], [ols_fit(x, series, confidence)]
    left, right = segment_fit(x, series, breakpoint, confidence)
    return [(1, int(breakpoint)), (int(breakpoint) + 1, n)], [left, right]


def compare_agents(
    logs: Iterable[MatchLog],
    agent_a: str,
    agent_b: str,
    indicator: str,
    *,
    transform: str | None = None,
    breakpoint: int | Mapping[str, int] | None = None,
    subset: str = "general",
    confidence: float = 0.99,
) -> CharacterizationReport:
    """Fit both agents' averaged curves and test each coefficient for separation.

    ``breakpoint`` may be one turn for both agents or a per-agent mapping.
    With a breakpoint, intervals are compared pairwise (first with first,
    second with second).
    """
    logs = list(logs)
    k = parse_transform(transform)
    intervals, fits = {}, {}
    for agent in (agent_a, agent_b):
        own = [log for log in logs if log.agent_id == agent]
        if not own:
            raise SelectionError(f"no logs for agent {agent!r}")
        series = average_by_turn(own, indicator, subset)
        if k is not None:
            series = transform_root(series, k)
        bp = breakpoint.get(agent) if isinstance(breakpoint, Mapping) else breakpoint
        intervals[agent], fits[agent] = _fit_agent(series, bp, confidence)
    verdicts = []
    for fa, fb in zip(fits[agent_a], fits[agent_b]):
        verdicts.append({c: separation_test(fa, fb, c) for c in COEFFICIENTS})
    return CharacterizationReport(
        indicator=indicator,
        agents=(agent_a, agent_b),
        transform=transform,
        subset=subset,
        confidence=_check_confidence(confidence),
        intervals=intervals,
        fits=fits,
        verdicts=verdicts,
    )
