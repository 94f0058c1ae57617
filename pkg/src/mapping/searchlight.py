"""
Searchlight: cross-validated decoding inside a sphere around every masked voxel.
"""
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import List, Optional

import numpy as np
from scipy.spatial import cKDTree
from tqdm import tqdm

from src.errors import ConfigError, LengthMismatch
from src.estimators.pipeline import EstimatorSpec
from src.evaluation.cross_validation import FoldPlan, cross_val_score
from src.imaging.volume import BrainMask

logger = logging.getLogger(__name__)

DEFAULT_SPEC = EstimatorSpec("svc_hinge_l2", {"C": 1.0})
# distances within this many mm of the radius count as inside
RADIUS_TOL = 1e-9


@dataclass
class SphereIndex:
    """For each masked voxel (feature order), the sorted feature indices within radius_mm."""
    neighbors: List[np.ndarray]
    radius_mm: float

    @property
    def n_centers(self) -> int:
        return len(self.neighbors)

    @property
    def sizes(self) -> np.ndarray:
        return np.array([len(n) for n in self.neighbors])


def build_spheres(mask: BrainMask, radius_mm: float) -> SphereIndex:
    """Neighborhoods measured in world millimeters, so anisotropic voxels are handled by the affine."""
    if radius_mm <= 0:
        raise ConfigError(f"radius_mm must be > 0, got {radius_mm}")
    coords = mask.world_coordinates()
    tree = cKDTree(coords)
    balls = tree.query_ball_point(coords, r=radius_mm + RADIUS_TOL)
    neighbors = [np.array(sorted(ball), dtype=np.intp) for ball in balls]
    logger.debug(f"Built {len(neighbors)} spheres (r={radius_mm} mm, mean size {np.mean([len(n) for n in neighbors]):.1f})")
    return SphereIndex(neighbors, float(radius_mm))


def searchlight_map(X, y, index: SphereIndex, plan: FoldPlan, spec: Optional[EstimatorSpec] = None,
                    n_jobs: int = 1, progress: bool = True) -> np.ndarray:
    """Mean CV accuracy of ``spec`` restricted to each sphere, one value per center.

    Any per-center failure aborts the whole map.
    """
    spec = spec or DEFAULT_SPEC
    if not spec.is_classifier:
        raise ConfigError(f"searchlight needs a classifier, got {spec.kind}")
    X = np.asarray(X, dtype=np.float64)
    if X.shape[1] != index.n_centers:
        raise LengthMismatch(f"X has {X.shape[1]} features, sphere index has {index.n_centers} centers")

    scores = np.empty(index.n_centers)

    def score_center(c: int) -> None:
        scores[c] = cross_val_score(spec, X[:, index.neighbors[c]], y, plan, "accuracy").mean()

    bar = tqdm(total=index.n_centers, desc="Searchlight", leave=False, disable=not progress)
    if n_jobs <= 1:
        for c in range(index.n_centers):
            score_center(c)
            bar.update(1)
    else:
        with ThreadPoolExecutor(max_workers=n_jobs) as pool:
            for _ in pool.map(score_center, range(index.n_centers)):
                bar.update(1)
    bar.close()
    return scores
