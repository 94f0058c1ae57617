"""
Cross-validation splitters, fold scoring and exhaustive grid search.
"""
import itertools
import logging
from dataclasses import dataclass, field
from typing import Any, Dict, List, Literal, Optional, Sequence, Tuple

import numpy as np

from src.errors import BadFraction, BadK, ConfigError, LengthMismatch
from src.estimators.pipeline import EstimatorSpec, FittedPipeline, fit_pipeline
from src.evaluation.metrics import ScoreSummary, accuracy_score, r2_score_per_target, summarize_scores

logger = logging.getLogger(__name__)

Metric = Literal["accuracy", "r2"]


@dataclass
class FoldPlan:
    """Train/test index pairs over n_samples rows."""
    folds: List[Tuple[np.ndarray, np.ndarray]]
    n_samples: int

    def __len__(self) -> int:
        return len(self.folds)

    def __iter__(self):
        return iter(self.folds)


def kfold(n: int, k: int, shuffle: bool = False, seed: int = 0) -> FoldPlan:
    """Contiguous k-fold blocks; the first n % k folds get one extra sample.

    With shuffle, the blocks are cut from a seeded permutation.
    """
    if not 2 <= k <= n:
        raise BadK(f"need 2 <= k <= n, got k={k}, n={n}")
    order = np.random.default_rng(seed).permutation(n) if shuffle else np.arange(n)
    sizes = np.full(k, n // k)
    sizes[: n % k] += 1
    folds = []
    start = 0
    for size in sizes:
        test = np.sort(order[start:start + size])
        train = np.setdiff1d(order, test)
        folds.append((train, test))
        start += size
    return FoldPlan(folds, n)


def shuffle_split(n: int, n_iter: int, test_fraction: float, seed: int = 0) -> FoldPlan:
    """n_iter independent random partitions with round(test_fraction * n) test rows (at least 1)."""
    if not 0 < test_fraction < 1:
        raise BadFraction(f"test_fraction must be in (0, 1), got {test_fraction}")
    if n_iter < 1:
        raise ConfigError(f"n_iter must be >= 1, got {n_iter}")
    n_test = min(max(1, int(round(test_fraction * n))), n - 1)
    rng = np.random.default_rng(seed)
    folds = []
    for _ in range(n_iter):
        perm = rng.permutation(n)
        folds.append((np.sort(perm[n_test:]), np.sort(perm[:n_test])))
    return FoldPlan(folds, n)


def score_pipeline(fitted: FittedPipeline, X, y, metric: Metric) -> float:
    prediction = fitted.predict(X)
    if metric == "accuracy":
        return accuracy_score(y, prediction)
    if metric == "r2":
        return float(np.mean(r2_score_per_target(y, prediction)))
    raise ConfigError(f"unknown metric {metric!r}")


def cross_val_score(spec: EstimatorSpec, X, y, plan: FoldPlan, metric: Metric = "accuracy") -> np.ndarray:
    """Fit on each training split (selection included) and score on its test split."""
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y)
    if X.shape[0] != plan.n_samples or y.shape[0] != plan.n_samples:
        raise LengthMismatch(f"plan covers {plan.n_samples} samples, X has {X.shape[0]}, y has {y.shape[0]}")
    scores = np.empty(len(plan))
    for f, (train, test) in enumerate(plan):
        fitted = fit_pipeline(spec, X[train], y[train])
        scores[f] = score_pipeline(fitted, X[test], y[test], metric)
    return scores


@dataclass
class GridEntry:
    params: Dict[str, Any]
    summary: ScoreSummary

    @property
    def mean(self) -> float:
        return self.summary.mean

    def to_dict(self) -> Dict:
        return {**self.params, "mean": self.summary.mean, "std": self.summary.std,
                **{f"fold_{i}": s for i, s in enumerate(self.summary.scores)}}


@dataclass
class GridResult:
    entries: List[GridEntry]
    best_index: int
    best_model: Optional[FittedPipeline] = None
    param_names: List[str] = field(default_factory=list)

    @property
    def best(self) -> GridEntry:
        return self.entries[self.best_index]

    def to_records(self) -> List[Dict]:
        return [e.to_dict() for e in self.entries]


def grid_search(spec: EstimatorSpec, grid: Dict[str, Sequence[Any]], X, y, plan: FoldPlan,
                metric: Metric = "accuracy", refit: bool = True) -> GridResult:
    """Score every combination of the grid (itertools.product order).

    The best entry is the first with the highest mean score; it is refit on
    all samples when ``refit`` is set.
    """
    if not grid or any(len(values) == 0 for values in grid.values()):
        raise ConfigError("grid must name at least one value per parameter")
    names = list(grid)
    entries = []
    best_index = 0
    for combo in itertools.product(*(grid[name] for name in names)):
        params = dict(zip(names, combo))
        scores = cross_val_score(spec.with_params(**params), X, y, plan, metric)
        entries.append(GridEntry(params, summarize_scores(scores)))
        if entries[-1].mean > entries[best_index].mean:
            best_index = len(entries) - 1
        logger.debug(f"grid {params}: {entries[-1].summary}")

    best_model = fit_pipeline(spec.with_params(**entries[best_index].params), X, y) if refit else None
    return GridResult(entries, best_index, best_model, names)
