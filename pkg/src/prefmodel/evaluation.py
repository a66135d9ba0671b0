"""Cross-validated scoring and report tables."""

from __future__ import annotations

import csv
import io
import json
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Callable, Sequence

import numpy as np

from .characterize import TTestResult, t_test
from .errors import DomainError, PrefModelError
from .featurize import FeatureMatrix
from .learners import TrainedModel, canonical_kind, predict, train
from .sampling import FoldSpec, sample_matches

logger = logging.getLogger(__name__)

Trainer = Callable[[np.ndarray, np.ndarray, Sequence[str]], object]


def accuracy(y_true, y_pred) -> float:
    y_true = np.asarray(y_true)
    if y_true.size == 0:
        raise DomainError("accuracy of an empty set")
    return float(np.mean(y_true == np.asarray(y_pred)))


def confusion(y_true, y_pred) -> dict[str, int]:
    y_true = np.asarray(y_true)
    y_pred = np.asarray(y_pred)
    return {
        "tp": int(((y_pred == 1) & (y_true == 1)).sum()),
        "fp": int(((y_pred == 1) & (y_true != 1)).sum()),
        "tn": int(((y_pred != 1) & (y_true != 1)).sum()),
        "fn": int(((y_pred != 1) & (y_true == 1)).sum()),
    }


def majority_baseline(labels) -> float:
    """Accuracy of always predicting the most frequent label."""
    labels = np.asarray(labels)
    if labels.size == 0:
        raise DomainError("majority baseline of an empty label set")
    pos = int((labels == 1).sum())
    return max(pos, labels.size - pos) / labels.size


def improvement(acc: float, baseline: float) -> float:
    """Relative gain over the baseline: ``(acc - baseline) / baseline``."""
    if baseline <= 0:
        raise DomainError(f"baseline must be positive, got {baseline}")
    return (acc - baseline) / baseline


def fold_rmse(accuracies: Sequence[float]) -> float:
    """Root-mean-square deviation of per-fold accuracies about their mean."""
    a = np.asarray(accuracies, dtype=float)
    if a.size == 0:
        return float("nan")
    return float(np.sqrt(np.mean((a - a.mean()) ** 2)))


@dataclass
class EvalReport:
    learner: str
    preference: str
    mode: str
    fold_accuracies: list[float | None]
    failed_folds: list[int]
    mean_accuracy: float
    rmse: float  # percentage points
    majority_baseline: float
    improvement: float
    tp: int
    fp: int
    tn: int
    fn: int
    fold_sizes: list[int] = field(default_factory=list)

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_dict(cls, data: dict) -> "EvalReport":
        return cls(**data)


def make_trainer(kind: str, **params) -> Trainer:
    kind = canonical_kind(kind)

    def trainer(X, y, names):
        return train(kind, X, y, names, **params)

    trainer.kind = kind
    return trainer


def _predict(model, X, names):
    if isinstance(model, TrainedModel):
        return predict(model, X, names)
    return model.predict(X)


def _summarize(learner, target, mode, fold_results, baseline_labels) -> EvalReport:
    accs, failed, sizes = [], [], []
    counts = {"tp": 0, "fp": 0, "tn": 0, "fn": 0}
    for i, res in enumerate(fold_results):
        if res is None:
            accs.append(None)
            failed.append(i)
            sizes.append(0)
            continue
        acc, conf, size = res
        accs.append(acc)
        sizes.append(size)
        for key in counts:
            counts[key] += conf[key]
    ok = [a for a in accs if a is not None]
    mean = float(np.mean(ok)) if ok else float("nan")
    base = majority_baseline(baseline_labels)
    return EvalReport(
        learner=learner,
        preference=target,
        mode=mode,
        fold_accuracies=accs,
        failed_folds=failed,
        mean_accuracy=mean,
        rmse=100.0 * fold_rmse(ok),
        majority_baseline=base,
        improvement=improvement(mean, base) if ok else float("nan"),
        fold_sizes=sizes,
        **counts,
    )


def cross_validate(
    trainer: Trainer,
    fm: FeatureMatrix,
    folds: FoldSpec,
    target: str,
    *,
    learner: str | None = None,
    sample_perc: float | None = None,
    seed: int = 0,
    jobs: int = 1,
) -> EvalReport:
    """Train on k-1 folds, score on the held-out fold, for every fold.

    With ``sample_perc`` each training fold is first reduced by stratified
    match sampling; test folds are never sampled.  A fold whose trainer
    raises is reported as failed and left out of the mean.
    """
    labels = fm.labels(target)
    refs = {r.match_id: r for r in fm.match_refs()}
    missing = set(refs) - set(folds.assignment)
    if missing:
        raise DomainError(f"{len(missing)} matches have no fold, e.g. {sorted(missing)[0]}")
    learner = learner or getattr(trainer, "kind", "custom")
    names = fm.feature_names

    def run_fold(i):
        test_ids = folds.test_ids(i)
        train_ids = folds.train_ids(i)
        if sample_perc is not None:
            picked = sample_matches([refs[m] for m in train_ids if m in refs], target, sample_perc, seed + i)
            train_ids = [r.match_id for r in picked]
        tr = np.isin(fm.match_ids, train_ids)
        te = np.isin(fm.match_ids, test_ids)
        if not te.any():
            logger.warning("fold %d has no test instances", i)
            return None
        try:
            model = trainer(fm.X[tr], labels[tr], names)
            pred = _predict(model, fm.X[te], names)
        except (PrefModelError, ValueError, ArithmeticError) as exc:
            logger.warning("%s/%s fold %d failed: %s", learner, target, i, exc)
            return None
        return accuracy(labels[te], pred), confusion(labels[te], pred), int(te.sum())

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(run_fold, range(folds.k)))
    else:
        results = [run_fold(i) for i in range(folds.k)]
    return _summarize(learner, target, fm.mode, results, labels)


def holdout_evaluate(
    trainer: Trainer, train_fm: FeatureMatrix, test_fm: FeatureMatrix, target: str, *, learner: str | None = None
) -> EvalReport:
    """Train on one matrix and score on another (one 'fold', no dispersion)."""
    if train_fm.feature_names != test_fm.feature_names:
        raise DomainError("train and test matrices use different registries")
    learner = learner or getattr(trainer, "kind", "custom")
    y_test = test_fm.labels(target)
    try:
        model = trainer(train_fm.X, train_fm.labels(target), train_fm.feature_names)
        pred = _predict(model, test_fm.X, test_fm.feature_names)
        res = [(accuracy(y_test, pred), confusion(y_test, pred), len(y_test))]
    except (PrefModelError, ValueError, ArithmeticError) as exc:
        logger.warning("%s/%s holdout failed: %s", learner, target, exc)
        res = [None]
    return _summarize(learner, target, test_fm.mode, res, y_test)


def compare_learners(a: EvalReport, b: EvalReport, confidence: float = 0.95) -> TTestResult:
    """Paired t-test on the per-fold accuracies both reports completed."""
    pairs = [(x, y) for x, y in zip(a.fold_accuracies, b.fold_accuracies) if x is not None and y is not None]
    if len(pairs) < 2:
        raise DomainError("need at least two folds completed by both learners")
    xs, ys = zip(*pairs)
    return t_test(xs, ys, confidence, paired=True)


def _pct(x: float, digits: int = 1) -> str:
    return "nan" if math.isnan(x) else f"{100 * x:.{digits}f}%"


def rollup_rows(reports: Sequence[EvalReport], preferences: Sequence[str], learners: Sequence[str]) -> list[list[str]]:
    index = {(r.preference, r.learner): r for r in reports}
    header = ["preference", "majority_class"]
    header += [f"{l} (rmse)" for l in learners]
    header += [f"{l} improvement" for l in learners]
    rows = [header]
    for pref in preferences:
        present = [index[(pref, l)] for l in learners if (pref, l) in index]
        base = present[0].majority_baseline if present else float("nan")
        row = [pref, _pct(base)]
        for l in learners:
            r = index.get((pref, l))
            row.append("" if r is None else f"{_pct(r.mean_accuracy)} ({r.rmse:.2f})")
        for l in learners:
            r = index.get((pref, l))
            row.append("" if r is None else _pct(r.improvement))
        rows.append(row)
    return rows


def rollup_csv(reports: Sequence[EvalReport], preferences: Sequence[str], learners: Sequence[str]) -> str:
    """Preferences as rows; per-learner accuracy (fold RMSE) and improvement as columns."""
    buf = io.StringIO()
    csv.writer(buf, lineterminator="\n").writerows(rollup_rows(reports, preferences, learners))
    return buf.getvalue()
