"""
FastICA and the concatenation strategy for group spatial ICA.

Component order and sign are arbitrary; compare results through
``match_components``.
"""
import logging
from dataclasses import dataclass, field
from typing import List, Literal, Sequence, Tuple

import numpy as np
from scipy import linalg

from src.decomposition.pca import flip_signs
from src.errors import BadComponentCount, ConfigError, VoxelCountMismatch
from src.preprocessing.signal import detrend

logger = logging.getLogger(__name__)

Nonlinearity = Literal["logcosh", "cube"]


@dataclass
class IcaModel:
    """Unmixing in whitened space plus everything needed to map back to channels."""
    unmixing: np.ndarray  # (k, k), orthogonal
    sources: np.ndarray  # (k, n_observations), unit variance rows
    whitening: np.ndarray  # (n_channels, k): whitened = (X - mean) @ whitening
    mean: np.ndarray
    seed: int
    nonlinearity: str
    converged: bool = True
    n_iter: int = 0

    @property
    def n_components(self) -> int:
        return self.unmixing.shape[0]

    @property
    def components(self) -> np.ndarray:
        """Channel-space unmixing (k, n_channels)."""
        return self.unmixing @ self.whitening.T

    @property
    def mixing(self) -> np.ndarray:
        return np.linalg.pinv(self.components)

    def transform(self, X) -> np.ndarray:
        return (np.asarray(X, dtype=np.float64) - self.mean) @ self.components.T


def _sym_decorrelation(W: np.ndarray) -> np.ndarray:
    """W <- (W W')^(-1/2) W"""
    s, u = linalg.eigh(W @ W.T)
    s = np.clip(s, np.finfo(np.float64).tiny, None)
    return (u / np.sqrt(s)) @ u.T @ W


def _contrast(Y: np.ndarray, nonlinearity: str) -> Tuple[np.ndarray, np.ndarray]:
    if nonlinearity == "logcosh":
        g = np.tanh(Y)
        return g, 1.0 - g ** 2
    if nonlinearity == "cube":
        return Y ** 3, 3.0 * Y ** 2
    raise ConfigError(f"unknown nonlinearity {nonlinearity!r}")


def whiten(X_obs: np.ndarray, n_components: int) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(whitened data, whitening matrix, mean). Whitened columns have unit mean square."""
    n, _ = X_obs.shape
    mean = X_obs.mean(axis=0)
    u, s, vt = linalg.svd(X_obs - mean, full_matrices=False)
    if s[n_components - 1] <= s[0] * 1e-12:
        raise BadComponentCount(f"data has rank < {n_components}")
    signs = flip_signs(u[:, :n_components], axis=0)
    whitening = (vt[:n_components].T / s[:n_components]) * signs * np.sqrt(n)
    return (u[:, :n_components] * signs) * np.sqrt(n), whitening, mean


def fastica(X_obs, n_components: int, nonlinearity: Nonlinearity = "logcosh", seed: int = 0,
            max_iter: int = 500, tol: float = 1e-6) -> IcaModel:
    """Symmetric FastICA on (n_observations, n_channels) data.

    Convergence: max |1 - |diag(W_new W_old')|| < tol. On failure the last
    iterate is returned with ``converged=False``.
    """
    X_obs = np.asarray(X_obs, dtype=np.float64)
    n, m = X_obs.shape
    if not 1 <= n_components <= min(n, m):
        raise BadComponentCount(f"n_components must be in 1..{min(n, m)}, got {n_components}")
    _contrast(np.zeros(1), nonlinearity)

    Xw, whitening, mean = whiten(X_obs, n_components)
    rng = np.random.default_rng(seed)
    W = _sym_decorrelation(rng.standard_normal((n_components, n_components)))

    converged = False
    it = 0
    lim = np.inf
    for it in range(1, max_iter + 1):
        g, g_prime = _contrast(Xw @ W.T, nonlinearity)
        W_new = _sym_decorrelation((g.T @ Xw) / n - g_prime.mean(axis=0)[:, np.newaxis] * W)
        lim = float(np.max(np.abs(np.abs(np.einsum("ij,ij->i", W_new, W)) - 1.0)))
        W = W_new
        if lim < tol:
            converged = True
            break

    if not converged:
        logger.warning(f"NoConvergence: FastICA did not converge in {max_iter} iterations (lim={lim:.3g})")
    sources = (Xw @ W.T).T
    return IcaModel(W, sources, whitening, mean, seed, nonlinearity, converged, it)


# =============================================================================
# EVALUATION HELPERS
# =============================================================================

def amari_index(W_est, A_true) -> float:
    """Normalized Amari distance of P = W_est @ A_true; 0 iff P is a scaled permutation."""
    P = np.abs(np.asarray(W_est) @ np.asarray(A_true))
    k = P.shape[0]
    if k < 2:
        return 0.0
    rows = (P.sum(axis=1) / P.max(axis=1) - 1.0).sum()
    cols = (P.sum(axis=0) / P.max(axis=0) - 1.0).sum()
    return float((rows + cols) / (2.0 * k * (k - 1)))


def match_components(reference, estimated) -> List[Tuple[int, int, float]]:
    """Greedy one-to-one matching of rows by |correlation|.

    Returns (reference row, estimated row, signed correlation) sorted by reference row.
    """
    A = np.asarray(reference, dtype=np.float64)
    B = np.asarray(estimated, dtype=np.float64)
    corr = np.corrcoef(A, B)[: A.shape[0], A.shape[0]:]
    strength = np.abs(corr)
    pairs = []
    for _ in range(min(A.shape[0], B.shape[0])):
        i, j = np.unravel_index(np.argmax(strength), strength.shape)
        pairs.append((int(i), int(j), float(corr[i, j])))
        strength[i, :] = -1.0
        strength[:, j] = -1.0
    return sorted(pairs)


# =============================================================================
# GROUP ICA
# =============================================================================

@dataclass
class ConcatIcaResult:
    maps: np.ndarray  # (n_components, n_voxels), unit variance rows
    model: IcaModel
    subject_dims: List[int] = field(default_factory=list)


def reduce_subject(X: np.ndarray, dim: int) -> np.ndarray:
    """Detrend a (time, voxels) matrix and keep its top ``dim`` temporal components (dim, voxels)."""
    Xd = detrend(X)
    if not 1 <= dim <= min(Xd.shape):
        raise BadComponentCount(f"per-subject dimension must be in 1..{min(Xd.shape)}, got {dim}")
    _, s, vt = linalg.svd(Xd, full_matrices=False)
    return s[:dim, np.newaxis] * vt[:dim]


def concat_ica(subject_matrices: Sequence[np.ndarray], n_components: int, per_subject_dim: int,
               seed: int = 0, nonlinearity: Nonlinearity = "logcosh",
               max_iter: int = 500, tol: float = 1e-6) -> ConcatIcaResult:
    """Spatial ICA of temporally concatenated, per-subject reduced data.

    Voxels are the observations, so the unmixed sources are spatial maps.
    """
    if not subject_matrices:
        raise ConfigError("concat_ica needs at least one subject")
    n_voxels = {np.asarray(X).shape[1] for X in subject_matrices}
    if len(n_voxels) != 1:
        raise VoxelCountMismatch(f"subjects have different voxel counts: {sorted(n_voxels)}")
    if per_subject_dim < n_components:
        raise BadComponentCount(f"per_subject_dim ({per_subject_dim}) must be >= n_components ({n_components})")

    reduced = [reduce_subject(np.asarray(X, dtype=np.float64), per_subject_dim) for X in subject_matrices]
    stacked = np.vstack(reduced)
    logger.debug(f"concat_ica: {len(reduced)} subjects -> stacked {stacked.shape}")

    model = fastica(stacked.T, n_components, nonlinearity, seed, max_iter, tol)
    maps = model.sources - model.sources.mean(axis=1, keepdims=True)
    maps /= maps.std(axis=1, keepdims=True)
    return ConcatIcaResult(maps, model, [r.shape[0] for r in reduced])
