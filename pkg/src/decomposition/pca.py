"""Principal component analysis by SVD of the centered data."""
from dataclasses import dataclass

import numpy as np
from scipy import linalg

from src.errors import BadComponentCount, LengthMismatch


def flip_signs(vectors: np.ndarray, axis: int = 1) -> np.ndarray:
    """Signs (+1/-1) making the largest-|entry| of each vector positive.

    ``axis`` is the axis running along each vector (1: rows are vectors).
    """
    vectors = np.asarray(vectors)
    v = vectors if axis == 1 else vectors.T
    pivots = v[np.arange(v.shape[0]), np.argmax(np.abs(v), axis=1)]
    return np.where(pivots < 0, -1.0, 1.0)


@dataclass
class PcaModel:
    components: np.ndarray  # (n_components, n_features), orthonormal rows
    singular_values: np.ndarray
    mean: np.ndarray
    explained_variance: np.ndarray
    explained_variance_ratio: np.ndarray

    @property
    def n_components(self) -> int:
        return self.components.shape[0]

    def transform(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.shape[-1] != self.mean.size:
            raise LengthMismatch(f"X has {X.shape[-1]} features, model has {self.mean.size}")
        return (X - self.mean) @ self.components.T

    def inverse_transform(self, Z) -> np.ndarray:
        return np.asarray(Z, dtype=np.float64) @ self.components + self.mean


def pca_fit(X, n_components: int) -> PcaModel:
    """Top right-singular vectors of the centered data.

    Signs are fixed so the largest-|entry| coordinate of each component is positive.
    """
    X = np.asarray(X, dtype=np.float64)
    n, d = X.shape
    if not 1 <= n_components <= min(n, d):
        raise BadComponentCount(f"n_components must be in 1..{min(n, d)}, got {n_components}")
    mean = X.mean(axis=0)
    _, s, vt = linalg.svd(X - mean, full_matrices=False)
    components = vt[:n_components] * flip_signs(vt[:n_components])[:, np.newaxis]
    variance = s ** 2 / max(n - 1, 1)
    total = variance.sum()
    ratio = variance[:n_components] / total if total > 0 else np.zeros(n_components)
    return PcaModel(components, s[:n_components], mean, variance[:n_components], ratio)
