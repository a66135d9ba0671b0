"""Exponential grid search over two hyperparameters (SVM cost and gamma by default)."""

from __future__ import annotations

import csv
import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import DomainError, PrefModelError
from .evaluation import accuracy
from .featurize import FeatureMatrix
from .learners import train_svm_smo
from .sampling import FoldSpec, make_test_split, sample_matches

logger = logging.getLogger(__name__)

GridTrainer = Callable[[np.ndarray, np.ndarray, float, float], object]


@dataclass(frozen=True)
class GridSpec:
    """Base-2 exponents; cells are visited c-major, in the order listed."""

    c_exps: tuple[int, ...] = tuple(range(-5, 16, 2))
    g_exps: tuple[int, ...] = tuple(range(3, -16, -2))

    def __post_init__(self):
        if not self.c_exps or not self.g_exps:
            raise DomainError("grid must have at least one value per axis")

    @property
    def size(self) -> int:
        return len(self.c_exps) * len(self.g_exps)

    def cells(self) -> list[tuple[int, int]]:
        return [(c, g) for c in self.c_exps for g in self.g_exps]


@dataclass(frozen=True)
class CellResult:
    c_exp: int
    g_exp: int
    accuracy: float
    wall_time: float
    failed: bool = False


@dataclass
class GridResult:
    best_c: int
    best_g: int
    best_accuracy: float
    cells: list[CellResult] = field(default_factory=list)

    def write_csv(self, stream) -> None:
        writer = csv.writer(stream, lineterminator="\n")
        writer.writerow(["c_exp", "g_exp", "accuracy", "wall_time"])
        for cell in self.cells:
            writer.writerow([cell.c_exp, cell.g_exp, f"{cell.accuracy:.6f}", f"{cell.wall_time:.4f}"])


def svm_grid_trainer(X, y, C, gamma):
    return train_svm_smo(X, y, C=C, gamma=gamma)


def evaluate_cell(trainer: GridTrainer, train, valid, c_exp: int, g_exp: int) -> CellResult:
    """Train with ``(2**c_exp, 2**g_exp)`` and score on the validation set."""
    X_tr, y_tr = train
    X_va, y_va = valid
    start = time.perf_counter()
    try:
        model = trainer(X_tr, y_tr, 2.0**c_exp, 2.0**g_exp)
        acc = accuracy(y_va, model.predict(X_va))
        failed = False
    except (PrefModelError, ValueError, ArithmeticError) as exc:
        logger.warning("grid cell c=2^%d g=2^%d failed: %s", c_exp, g_exp, exc)
        acc, failed = 0.0, True
    return CellResult(c_exp, g_exp, acc, time.perf_counter() - start, failed)


def grid_search(
    trainer: GridTrainer,
    train: tuple[np.ndarray, np.ndarray],
    valid: tuple[np.ndarray, np.ndarray],
    grid: GridSpec | None = None,
    *,
    jobs: int = 1,
) -> GridResult:
    """Evaluate every cell and keep the first one, in loop order, with the top accuracy.

    Cells can run concurrently; the winner depends only on grid position.
    """
    grid = grid or GridSpec()
    cells = grid.cells()

    def run(cell):
        return evaluate_cell(trainer, train, valid, *cell)

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(run, cells))
    else:
        results = [run(cell) for cell in cells]

    best = results[0]
    for res in results[1:]:
        if res.accuracy > best.accuracy:
            best = res
    return GridResult(best.c_exp, best.g_exp, best.accuracy, results)


def tune_fold(
    fm: FeatureMatrix,
    folds: FoldSpec,
    fold: int,
    target: str,
    *,
    trainer: GridTrainer = svm_grid_trainer,
    grid: GridSpec | None = None,
    sample_perc: float | None = 0.25,
    validation_fraction: float = 0.2,
    seed: int = 0,
    jobs: int = 1,
) -> GridResult:
    """Grid search inside one cross-validation fold.

    The fold's training matches are sampled (when ``sample_perc`` is set)
    and then split into inner training and validation matches; the
    held-out test fold is never looked at.
    """
    if not 0 <= fold < folds.k:
        raise DomainError(f"fold {fold} outside 0..{folds.k - 1}")
    refs = {r.match_id: r for r in fm.match_refs()}
    train_refs = [refs[m] for m in folds.train_ids(fold) if m in refs]
    if sample_perc is not None:
        train_refs = sample_matches(train_refs, target, sample_perc, seed + fold)
    valid_refs, inner_refs = make_test_split(train_refs, target, validation_fraction, seed + fold)
    labels = fm.labels(target)
    tr = np.isin(fm.match_ids, [r.match_id for r in inner_refs])
    va = np.isin(fm.match_ids, [r.match_id for r in valid_refs])
    return grid_search(trainer, (fm.X[tr], labels[tr]), (fm.X[va], labels[va]), grid, jobs=jobs)
