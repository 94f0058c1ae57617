"""
Univariate ANOVA screening and k-best feature selection.

Features are ranked by F directly (no p-values): for fixed degrees of
freedom the ordering is the same.
"""
import math
from dataclasses import dataclass

import numpy as np

from src.errors import ConfigError, EmptyClass, LengthMismatch, ShapeMismatch, SingleClass

# SS values below this fraction of the total sum of squares are treated as 0
SS_RTOL = 1e-12


def f_classif(X, y) -> np.ndarray:
    """One-way ANOVA F statistic per feature.

    Zero within-class variance with nonzero between-class variance gives
    +inf; zero between-class variance gives 0.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y).ravel()
    if X.ndim != 2 or X.shape[0] != y.shape[0]:
        raise ShapeMismatch(f"X {X.shape} and y ({y.shape[0]},) disagree")
    classes, codes, counts = np.unique(y, return_inverse=True, return_counts=True)
    g, n = classes.size, y.size
    if g < 2:
        raise SingleClass(f"F-test needs at least two classes, got {classes.tolist()}")
    if n <= g:
        raise EmptyClass(f"{n} samples are not enough for {g} classes")

    grand = X.mean(axis=0)
    sums = np.zeros((g, X.shape[1]))
    np.add.at(sums, codes, X)
    means = sums / counts[:, np.newaxis]
    ss_between = (counts[:, np.newaxis] * (means - grand) ** 2).sum(axis=0)
    ss_within = ((X - means[codes]) ** 2).sum(axis=0)

    scale = SS_RTOL * ((X - grand) ** 2).sum(axis=0)
    ss_between = np.where(ss_between <= scale, 0.0, ss_between)
    ss_within = np.where(ss_within <= scale, 0.0, ss_within)

    msb = ss_between / (g - 1)
    msw = ss_within / (n - g)
    with np.errstate(divide="ignore", invalid="ignore"):
        scores = np.where(ss_between == 0, 0.0, np.where(ss_within == 0, np.inf, msb / msw))
    return scores


@dataclass(frozen=True)
class FeatureSelector:
    """Support mask over the original features plus the scores it came from."""
    scores: np.ndarray
    support: np.ndarray
    k: int

    @property
    def n_features(self) -> int:
        return self.support.size

    @property
    def indices(self) -> np.ndarray:
        return np.flatnonzero(self.support)

    def transform(self, X) -> np.ndarray:
        """Keep the selected columns in their original order."""
        X = np.asarray(X, dtype=np.float64)
        if X.ndim == 1:
            X = X[np.newaxis, :]
        if X.shape[1] != self.n_features:
            raise LengthMismatch(f"X has {X.shape[1]} features, selector expects {self.n_features}")
        return X[:, self.support]

    def inverse_transform(self, W) -> np.ndarray:
        """Scatter reduced columns back to full width, zeros elsewhere."""
        W = np.asarray(W, dtype=np.float64)
        squeeze = W.ndim == 1
        if squeeze:
            W = W[np.newaxis, :]
        n_selected = int(self.support.sum())
        if W.shape[1] != n_selected:
            raise LengthMismatch(f"W has {W.shape[1]} columns, selector keeps {n_selected}")
        full = np.zeros((W.shape[0], self.n_features))
        full[:, self.support] = W
        return full[0] if squeeze else full


def select_k_best(scores, k: int) -> FeatureSelector:
    """Mark the k highest scores; ties go to the lower feature index."""
    scores = np.asarray(scores, dtype=np.float64)
    if k < 1:
        raise ConfigError(f"k must be >= 1, got {k}")
    k = min(int(k), scores.size)
    # lexsort sorts by the last key first: descending score, then ascending index
    order = np.lexsort((np.arange(scores.size), -scores))
    support = np.zeros(scores.size, dtype=bool)
    support[order[:k]] = True
    return FeatureSelector(scores, support, k)


def select_percentile(scores, percentile: float) -> FeatureSelector:
    """Keep ceil(percentile * n / 100) features (at least one)."""
    if not 0 < percentile <= 100:
        raise ConfigError(f"percentile must be in (0, 100], got {percentile}")
    scores = np.asarray(scores, dtype=np.float64)
    return select_k_best(scores, max(1, math.ceil(percentile * scores.size / 100)))


def select_transform(sel: FeatureSelector, X) -> np.ndarray:
    return sel.transform(X)


def select_inverse_transform(sel: FeatureSelector, W) -> np.ndarray:
    return sel.inverse_transform(W)
