"""
Pipeline configuration: pydantic models plus the flat key=value file loader.

Precedence is defaults < config file < command-line flags.
"""
from pathlib import Path
from typing import Any, Dict, List, Optional

from dotenv import dotenv_values
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator

from config.estimators import DEFAULT_C_GRID
from src.errors import BadBand, ConfigError


# =============================================================================
# SIGNAL CLEANING
# =============================================================================

class CleanConfig(BaseModel):
    """Switches for per-voxel time-series cleaning."""
    model_config = ConfigDict(frozen=True)

    detrend: bool = False
    standardize: bool = False
    low_cut_hz: Optional[float] = None
    high_cut_hz: Optional[float] = None
    tr_seconds: float = Field(2.0, gt=0)

    @property
    def nyquist_hz(self) -> float:
        return 0.5 / self.tr_seconds

    @property
    def filters(self) -> bool:
        return self.low_cut_hz is not None or self.high_cut_hz is not None

    @property
    def is_noop(self) -> bool:
        return not (self.detrend or self.standardize or self.filters)

    def check_band(self) -> None:
        """Raise BadBand unless low < high < Nyquist (for whichever cuts are set)."""
        low, high, nyquist = self.low_cut_hz, self.high_cut_hz, self.nyquist_hz
        if low is not None and not 0 <= low < nyquist:
            raise BadBand(f"low cut {low} Hz must be in [0, {nyquist:g}) Hz")
        if high is not None and not 0 < high < nyquist:
            raise BadBand(f"high cut {high} Hz must be in (0, {nyquist:g}) Hz")
        if low is not None and high is not None and not low < high:
            raise BadBand(f"low cut {low} Hz must be below high cut {high} Hz")


def parse_band(text: str) -> tuple[float, float]:
    """'LOW:HIGH' -> (low, high)."""
    try:
        low, high = (float(part) for part in text.split(":"))
    except ValueError as e:
        raise ConfigError(f"band must look like LOW:HIGH, got {text!r}") from e
    return low, high


# =============================================================================
# PIPELINE
# =============================================================================

LIST_FIELDS = {"data", "c_grid", "pixels", "shape"}


class PipelineConfig(BaseModel):
    """Every knob of every subcommand; unused fields are ignored by the others."""
    model_config = ConfigDict(extra="forbid")

    # inputs / outputs
    data: List[Path] = Field(default_factory=list)
    mask: Optional[Path] = None
    labels: Optional[Path] = None
    stimuli: Optional[Path] = None
    truth: Optional[Path] = None
    background: Optional[Path] = None
    out_dir: Path = Path("results")
    seed: int = 0
    n_jobs: int = Field(1, ge=1)

    # cleaning
    detrend: bool = False
    standardize: bool = False
    low_cut_hz: Optional[float] = None
    high_cut_hz: Optional[float] = None
    tr_seconds: float = Field(2.0, gt=0)

    # decoding
    classifier: str = "svc"
    C: float = Field(1.0, gt=0)
    k: Optional[int] = Field(500, ge=1)
    percentile: Optional[float] = Field(None, gt=0, le=100)
    n_folds: int = Field(5, ge=2)
    shuffle: bool = False

    # encoding / pixel decoding
    regressor: str = "ridge"
    alpha: float = Field(100.0, ge=0)
    encode_folds: int = Field(10, ge=2)
    n_top_voxels: int = Field(50, ge=1)
    lars_max_iter: int = Field(10, ge=1)
    c_grid: List[float] = Field(default_factory=lambda: list(DEFAULT_C_GRID))
    pixels: Optional[List[int]] = None

    # searchlight
    radius_mm: Optional[float] = Field(None, gt=0)

    # ica
    n_components: int = Field(10, ge=1)
    subject_dim: Optional[int] = Field(None, ge=1)

    # clustering
    method: str = "ward"
    n_clusters: int = Field(100, ge=1)
    n_init: int = Field(10, ge=1)
    smooth: int = Field(0, ge=0)
    pca_components: Optional[int] = Field(None, ge=1)

    # rendering / resampling
    axis: int = Field(2, ge=0, le=2)
    slice_index: Optional[int] = None
    interp: str = "trilinear"

    # synthetic data
    dataset: str = "decoding"
    shape: List[int] = Field(default_factory=lambda: [12, 12, 12])
    n_per_class: int = 40
    snr: float = 5.0
    n_trials: int = 200
    n_voxels: int = 100
    noise_sigma: float = 0.5
    n_subjects: int = 2
    nt: int = 100
    n_networks: int = 3

    @field_validator(*LIST_FIELDS, mode="before")
    @classmethod
    def _split_csv(cls, value):
        if isinstance(value, str):
            return [part.strip() for part in value.split(",") if part.strip()]
        return value

    @property
    def clean(self) -> CleanConfig:
        cfg = CleanConfig(detrend=self.detrend, standardize=self.standardize, low_cut_hz=self.low_cut_hz,
                          high_cut_hz=self.high_cut_hz, tr_seconds=self.tr_seconds)
        cfg.check_band()
        return cfg

    def require(self, *names: str) -> None:
        """Check that the named path fields are set and point at existing files."""
        for name in names:
            value = getattr(self, name)
            paths = value if isinstance(value, list) else [value]
            if value is None or not paths:
                raise ConfigError(f"missing required input '{name}'")
            for p in paths:
                if not Path(p).exists():
                    raise ConfigError(f"{name} file not found: {p}")


def _normalize_key(key: str) -> str:
    key = key.strip().replace("-", "_")
    return key if key == "C" else key.lower()


def load_config_file(path: Path) -> Dict[str, Any]:
    """Parse a flat key=value file (comments with #, no sections)."""
    if not Path(path).exists():
        raise ConfigError(f"config file not found: {path}")
    values = dotenv_values(path)
    return {_normalize_key(k): v for k, v in values.items() if v is not None and v != ""}


def build_config(config_path: Optional[Path] = None, **overrides) -> PipelineConfig:
    """Merge defaults, the optional config file and non-None flag overrides."""
    merged: Dict[str, Any] = load_config_file(config_path) if config_path else {}
    merged.update({k: v for k, v in overrides.items() if v is not None})
    try:
        return PipelineConfig(**merged)
    except ValidationError as e:
        first = e.errors()[0]
        where = ".".join(str(p) for p in first["loc"])
        raise ConfigError(f"{where}: {first['msg']}") from e
