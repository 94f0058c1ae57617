"""Estimator configuration - simple dict with estimator name -> EstimatorSpec."""
from src.errors import ConfigError
from src.estimators.pipeline import EstimatorSpec

# =============================================================================
# ESTIMATOR DEFINITIONS
# Dict: CLI name -> spec (hyperparameters here are defaults, flags override)
# =============================================================================

ESTIMATORS = {
    # Classifiers
    "svc": EstimatorSpec("svc_hinge_l2", {"C": 1.0}),
    "svc_sqhinge": EstimatorSpec("svc_sqhinge_l2", {"C": 1.0}),
    "svc_l1": EstimatorSpec("svc_sqhinge_l1", {"C": 0.05}),
    "logreg": EstimatorSpec("logreg_l1", {"C": 0.05}),
    "logreg_l2": EstimatorSpec("logreg_l2", {"C": 0.05}),

    # Regressors
    "ridge": EstimatorSpec("ridge", {"alpha": 100.0}),
    "lasso": EstimatorSpec("lasso", {"alpha": 0.1}),
    "lasso_lars": EstimatorSpec("lasso_lars", {"n_folds": 5, "max_iter": 10}),
}

CLASSIFIERS = [name for name, spec in ESTIMATORS.items() if spec.is_classifier]
REGRESSORS = [name for name, spec in ESTIMATORS.items() if not spec.is_classifier]

# =============================================================================
# PIXEL DECODING PROTOCOL
# Four model kinds scored over a grid of C values
# =============================================================================

PIXEL_MODELS = {
    "logreg_l1": EstimatorSpec("logreg_l1"),
    "logreg_l2": EstimatorSpec("logreg_l2"),
    "svc_l1": EstimatorSpec("svc_sqhinge_l1"),
    "svc_l2": EstimatorSpec("svc_hinge_l2"),
}

BASE_C_GRID = (0.0005, 0.001, 0.005, 0.01, 0.05, 0.1)
# scaled to the amplitude of synthetic voxel responses
C_GRID_SCALE = 2.0
DEFAULT_C_GRID = tuple(c * C_GRID_SCALE for c in BASE_C_GRID)


def get_estimator(name: str, **params) -> EstimatorSpec:
    """Look up a named spec and override its hyperparameters."""
    if name not in ESTIMATORS:
        raise ConfigError(f"Unknown estimator: {name}. Available: {list(ESTIMATORS)}")
    spec = ESTIMATORS[name]
    known = {k: v for k, v in params.items() if v is not None}
    return spec.with_params(**known) if known else spec
