"""
Analysis runners behind the CLI subcommands.

Each run_* function takes a validated PipelineConfig, reads its inputs,
runs one analysis end to end and writes NIfTI maps, CSV tables and PGM
slices under ``cfg.out_dir``. The returned RunReport lists the headline
numbers and every file written.

Outputs contain no timestamps, so a fixed seed reproduces the output tree
byte for byte.
"""
import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional

import numpy as np
from tqdm import tqdm

from config.estimators import PIXEL_MODELS, get_estimator
from config.pipeline import PipelineConfig
from src.errors import BadShape, ConfigError, LengthMismatch
from src.imaging.masking import apply_mask, compute_mask, smooth_volume, unmask
from src.imaging.nifti import read_nifti, write_nifti
from src.imaging.resample import resample
from src.imaging.volume import BrainMask, Volume4D, affines_match
from src.ingestion.tables import read_labels, read_matrix, write_grid, write_labels, write_matrix, write_records
from src.preprocessing.signal import clean_signals
from src.utils.render import render_label_slice, render_slice

logger = logging.getLogger(__name__)


@dataclass
class RunReport:
    """Headline numbers and written files of one run."""
    command: str
    metrics: Dict[str, Any] = field(default_factory=dict)
    outputs: List[Path] = field(default_factory=list)
    table: List[Dict[str, Any]] = field(default_factory=list)

    def add(self, path: Path) -> Path:
        self.outputs.append(Path(path))
        return path

    def to_dict(self) -> Dict:
        return {
            "command": self.command,
            "metrics": self.metrics,
            "outputs": [str(p) for p in self.outputs],
            "table": self.table,
        }


def save_report(report: RunReport, out_dir: Path) -> Path:
    """Write ``<command>_report.json`` next to the other outputs."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / f"{report.command.replace('-', '_')}_report.json"
    with open(path, "w", encoding="utf-8") as f:
        json.dump(report.to_dict(), f, indent=2, ensure_ascii=False, default=float)
    return path


# =============================================================================
# SHARED INPUT HANDLING
# =============================================================================

def load_volume(cfg: PipelineConfig, which: int = 0) -> Volume4D:
    cfg.require("data")
    if which >= len(cfg.data):
        raise ConfigError(f"expected at least {which + 1} data files, got {len(cfg.data)}")
    return read_nifti(cfg.data[which])


def load_mask(cfg: PipelineConfig, vol: Volume4D) -> BrainMask:
    """The --mask file when given, otherwise a mask computed from the mean volume."""
    if cfg.mask is None:
        mask = compute_mask(vol.mean_volume())
        logger.info(f"Computed mask with {mask.n_voxels} voxels")
        return mask
    cfg.require("mask")
    return BrainMask.from_volume(read_nifti(cfg.mask))


def masked_signals(cfg: PipelineConfig, vol: Volume4D, mask: BrainMask) -> np.ndarray:
    """(frames, voxels) matrix after optional smoothing and cleaning."""
    if cfg.smooth > 1:
        vol = smooth_volume(vol, cfg.smooth)
    X = apply_mask(vol, mask)
    clean = cfg.clean
    return X if clean.is_noop else clean_signals(X, clean)


def load_background(cfg: PipelineConfig, like: Volume4D) -> Optional[Volume4D]:
    """--background resampled onto the grid of ``like`` when the grids differ."""
    if cfg.background is None:
        return None
    cfg.require("background")
    bg = read_nifti(cfg.background)
    if bg.spatial_shape != like.spatial_shape or not affines_match(bg.affine, like.affine):
        bg = resample(bg, like.affine, like.spatial_shape, cfg.interp)
    return bg


def slice_index(cfg: PipelineConfig, vol: Volume4D) -> int:
    return cfg.slice_index if cfg.slice_index is not None else vol.spatial_shape[cfg.axis] // 2


def write_map(report: RunReport, cfg: PipelineConfig, values: np.ndarray, mask: BrainMask, name: str,
              background: Optional[Volume4D] = None, render: bool = True) -> Volume4D:
    """Unmask one or more rows, write ``name``.nii and a PGM slice of the first row."""
    vol = unmask(values, mask)
    report.add(cfg.out_dir / f"{name}.nii")
    write_nifti(vol, cfg.out_dir / f"{name}.nii")
    if render:
        first = Volume4D(vol.data[..., :1], vol.affine)
        report.add(render_slice(first, background, cfg.axis, slice_index(cfg, vol), cfg.out_dir / f"{name}.pgm"))
    return vol


def _check_rows(n_rows: int, n_frames: int, what: str) -> None:
    if n_rows != n_frames:
        raise LengthMismatch(f"{what} has {n_rows} rows but the data has {n_frames} frames")


def _stimulus_side(n_pixels: int) -> int:
    side = math.isqrt(n_pixels)
    if side * side != n_pixels:
        raise BadShape(f"stimuli must be square images, got {n_pixels} pixels per row")
    return side


# =============================================================================
# DECODING
# =============================================================================

def decoding_spec(cfg: PipelineConfig):
    spec = get_estimator(cfg.classifier, C=cfg.C)
    if not spec.is_classifier:
        raise ConfigError(f"{cfg.classifier} is not a classifier")
    if cfg.percentile is not None:
        return spec.with_params(select_percentile=cfg.percentile, select_k=None)
    return spec.with_params(select_k=cfg.k)


def run_decode(cfg: PipelineConfig) -> RunReport:
    """ANOVA screening + linear classifier, cross-validated, then refit for the weight map."""
    from src.estimators.feature_selection import f_classif
    from src.estimators.pipeline import fit_pipeline
    from src.evaluation.cross_validation import cross_val_score, kfold
    from src.evaluation.metrics import summarize_scores

    cfg.require("labels")
    vol = load_volume(cfg)
    mask = load_mask(cfg, vol)
    X = masked_signals(cfg, vol, mask)
    y = read_labels(cfg.labels)
    _check_rows(len(y), X.shape[0], "labels")

    spec = decoding_spec(cfg)
    plan = kfold(len(y), cfg.n_folds, cfg.shuffle, cfg.seed)
    scores = cross_val_score(spec, X, y, plan, "accuracy")
    summary = summarize_scores(scores)
    logger.info(f"{spec.describe()}: accuracy {summary}")

    report = RunReport("decode", {"estimator": spec.describe(), "accuracy_mean": summary.mean,
                                  "accuracy_std": summary.std, "n_voxels": mask.n_voxels})
    report.table = [{"fold": f, "accuracy": s} for f, s in enumerate(summary.scores)]
    report.add(write_records(report.table, cfg.out_dir / "decode_scores.csv"))

    fitted = fit_pipeline(spec, X, y)
    weights = fitted.full_coef()[0]
    report.metrics["n_nonzero_weights"] = int(np.count_nonzero(weights))

    # constant-within-class voxels score +inf; the map stores the largest finite F instead
    F = f_classif(X, y)
    finite = F[np.isfinite(F)]
    F = np.where(np.isfinite(F), F, finite.max() if finite.size else 0.0)

    background = load_background(cfg, vol) or vol.mean_volume()
    write_map(report, cfg, weights, mask, "decode_weights", background)
    write_map(report, cfg, F, mask, "decode_fscores", background)
    return report


# =============================================================================
# ENCODING
# =============================================================================

def _encoding_inputs(cfg: PipelineConfig):
    cfg.require("stimuli")
    vol = load_volume(cfg)
    mask = load_mask(cfg, vol)
    bold = masked_signals(cfg, vol, mask)
    stimuli = read_matrix(cfg.stimuli)
    _check_rows(stimuli.shape[0], bold.shape[0], "stimuli")
    return vol, mask, bold, stimuli


def encoding_r2(stimuli: np.ndarray, bold: np.ndarray, cfg: PipelineConfig) -> np.ndarray:
    """Mean held-out r² per voxel over ``encode_folds`` contiguous folds."""
    from src.estimators.linear import predict
    from src.estimators.regression import fit_lasso_cd, fit_ridge
    from src.evaluation.cross_validation import kfold
    from src.evaluation.metrics import r2_score_per_target

    if cfg.regressor not in ("ridge", "lasso"):
        raise ConfigError(f"encoding regressor must be ridge or lasso, got {cfg.regressor!r}")
    plan = kfold(bold.shape[0], cfg.encode_folds, cfg.shuffle, cfg.seed)
    r2 = np.zeros(bold.shape[1])
    for train, test in tqdm(plan.folds, desc="Encoding folds", leave=False):
        if cfg.regressor == "ridge":
            prediction = predict(fit_ridge(stimuli[train], bold[train], cfg.alpha), stimuli[test])
        else:
            prediction = np.column_stack([
                predict(fit_lasso_cd(stimuli[train], bold[train, v], cfg.alpha), stimuli[test])
                for v in range(bold.shape[1])
            ])
        r2 += r2_score_per_target(bold[test], prediction.reshape(len(test), -1))
    return r2 / len(plan)


def run_encode(cfg: PipelineConfig) -> RunReport:
    """Stimulus -> voxel regression: r² map plus sparse receptive fields of the best voxels."""
    from src.estimators.regression import fit_lasso_lars_cv

    vol, mask, bold, stimuli = _encoding_inputs(cfg)
    side = _stimulus_side(stimuli.shape[1])

    r2 = encoding_r2(stimuli, bold, cfg)
    report = RunReport("encode", {"regressor": cfg.regressor, "alpha": cfg.alpha,
                                  "r2_max": float(r2.max()), "r2_mean": float(r2.mean())})
    background = load_background(cfg, vol)
    write_map(report, cfg, r2, mask, "encode_r2", background)

    n_top = min(cfg.n_top_voxels, r2.size)
    top = np.lexsort((np.arange(r2.size), -r2))[:n_top]
    rf_dir = cfg.out_dir / "receptive_fields"
    for rank, v in enumerate(tqdm(top, desc="Receptive fields", leave=False)):
        model = fit_lasso_lars_cv(stimuli, bold[:, v], n_folds=5, max_iter=cfg.lars_max_iter)
        field_grid = model.coef[0].reshape(side, side)
        path = report.add(write_grid(field_grid, rf_dir / f"voxel_{int(v):05d}.csv"))
        report.table.append({"rank": rank, "voxel": int(v), "r2": float(r2[v]),
                             "alpha": model.reg, "n_pixels": model.n_nonzero, "field": path.name})
    report.add(write_records(report.table, cfg.out_dir / "encode_top_voxels.csv"))
    return report


def run_decode_pixels(cfg: PipelineConfig) -> RunReport:
    """Predict each stimulus pixel from the voxels for every pixel model and C value.

    The summary CSV has one row per model and one "mean ± std" column per C,
    aggregated over pixels; a grid of per-pixel accuracies is written for
    the best C of each model.
    """
    from src.evaluation.cross_validation import grid_search, kfold
    from src.evaluation.metrics import format_scores_report, summarize_scores

    _, _, bold, stimuli = _encoding_inputs(cfg)
    side = _stimulus_side(stimuli.shape[1])
    pixels = cfg.pixels if cfg.pixels is not None else list(range(stimuli.shape[1]))
    if any(not 0 <= p < stimuli.shape[1] for p in pixels):
        raise ConfigError(f"pixels must be in 0..{stimuli.shape[1] - 1}")
    c_grid = [float(c) for c in cfg.c_grid]
    plan = kfold(bold.shape[0], cfg.n_folds, cfg.shuffle, cfg.seed)

    # accuracy[model] is (n_C, n_pixels)
    accuracy = {name: np.empty((len(c_grid), len(pixels))) for name in PIXEL_MODELS}
    for j, pixel in enumerate(tqdm(pixels, desc="Pixels", leave=False)):
        target = stimuli[:, pixel].astype(np.int64)
        for name, spec in PIXEL_MODELS.items():
            result = grid_search(spec, {"C": c_grid}, bold, target, plan, "accuracy", refit=False)
            accuracy[name][:, j] = [entry.mean for entry in result.entries]

    report = RunReport("decode-pixels", {"n_pixels": len(pixels), "c_grid": c_grid})
    summary_rows, long_rows, best_rows = [], [], {}
    for name, acc in accuracy.items():
        summaries = [summarize_scores(acc[c]) for c in range(len(c_grid))]
        summary_rows.append({"model": name, **{f"C={c:g}": str(s) for c, s in zip(c_grid, summaries)}})
        long_rows.extend({"model": name, "C": c, "mean": s.mean, "std": s.std} for c, s in zip(c_grid, summaries))

        best = int(np.argmax([s.mean for s in summaries]))
        grid = np.full(side * side, np.nan)
        grid[pixels] = acc[best]
        report.add(write_grid(grid.reshape(side, side), cfg.out_dir / f"pixel_accuracy_{name}.csv"))
        report.metrics[f"{name}_best_C"] = c_grid[best]
        report.metrics[f"{name}_best_mean"] = summaries[best].mean
        best_rows[f"{name} C={c_grid[best]:g}"] = summaries[best]

    report.table = long_rows
    report.add(write_records(summary_rows, cfg.out_dir / "decode_pixels.csv"))
    report.add(write_records(long_rows, cfg.out_dir / "decode_pixels_long.csv"))
    markdown = cfg.out_dir / "decode_pixels.md"
    markdown.write_text(format_scores_report(best_rows, "pixel decoding, best C per model") + "\n", encoding="utf-8")
    report.add(markdown)
    return report


# =============================================================================
# SEARCHLIGHT
# =============================================================================

def run_searchlight(cfg: PipelineConfig) -> RunReport:
    from src.evaluation.cross_validation import kfold
    from src.mapping.searchlight import build_spheres, searchlight_map

    if cfg.radius_mm is None:
        raise ConfigError("searchlight needs --radius-mm")
    cfg.require("labels")
    vol = load_volume(cfg)
    mask = load_mask(cfg, vol)
    X = masked_signals(cfg, vol, mask)
    y = read_labels(cfg.labels)
    _check_rows(len(y), X.shape[0], "labels")

    spec = get_estimator(cfg.classifier, C=cfg.C)
    index = build_spheres(mask, cfg.radius_mm)
    plan = kfold(len(y), cfg.n_folds, cfg.shuffle, cfg.seed)
    scores = searchlight_map(X, y, index, plan, spec, n_jobs=cfg.n_jobs)

    report = RunReport("searchlight", {"estimator": spec.describe(), "radius_mm": cfg.radius_mm,
                                       "mean_sphere_size": float(index.sizes.mean()),
                                       "score_max": float(scores.max()), "score_mean": float(scores.mean())})
    write_map(report, cfg, scores, mask, "searchlight_scores", load_background(cfg, vol) or vol.mean_volume())
    return report


# =============================================================================
# RESTING STATE
# =============================================================================

def run_ica(cfg: PipelineConfig) -> RunReport:
    """Group spatial ICA over every --data subject."""
    from src.decomposition.ica import concat_ica, match_components

    first = load_volume(cfg)
    mask = load_mask(cfg, first)
    subjects = [masked_signals(cfg, first, mask)]
    for s in range(1, len(cfg.data)):
        subjects.append(masked_signals(cfg, read_nifti(cfg.data[s]), mask))

    dim = cfg.subject_dim or cfg.n_components
    result = concat_ica(subjects, cfg.n_components, dim, seed=cfg.seed)
    report = RunReport("ica", {"n_subjects": len(subjects), "n_components": cfg.n_components,
                               "subject_dim": dim, "converged": result.model.converged,
                               "n_iter": result.model.n_iter})

    background = load_background(cfg, first) or first.mean_volume()
    write_map(report, cfg, result.maps, mask, "ica_components", render=False)
    for i, row in enumerate(result.maps):
        write_map(report, cfg, row, mask, f"ica_component_{i:02d}", background, render=i < 3)

    if cfg.truth is not None:
        cfg.require("truth")
        truth = apply_mask(read_nifti(cfg.truth), mask)
        pairs = match_components(truth, result.maps)
        report.table = [{"truth": i, "component": j, "correlation": c} for i, j, c in pairs]
        report.metrics["min_abs_correlation"] = min(abs(c) for _, _, c in pairs)
        report.add(write_records(report.table, cfg.out_dir / "ica_matching.csv"))
    return report


def run_cluster(cfg: PipelineConfig) -> RunReport:
    """Ward (grid-connected) or K-means parcellation of the masked voxels."""
    from src.clustering.graph import count_regions, grid_to_graph
    from src.clustering.kmeans import kmeans
    from src.clustering.ward import agglomeration_transform, ward_agglomerate
    from src.decomposition.pca import pca_fit

    vol = load_volume(cfg)
    mask = load_mask(cfg, vol)
    X = masked_signals(cfg, vol, mask)
    if cfg.pca_components is not None:
        # reduce each voxel's time course to its leading temporal components
        X = pca_fit(X.T, cfg.pca_components).transform(X.T).T

    if cfg.method == "ward":
        parcellation = ward_agglomerate(X, grid_to_graph(mask), cfg.n_clusters)
    elif cfg.method == "kmeans":
        parcellation = kmeans(X.T, cfg.n_clusters, seed=cfg.seed, n_init=cfg.n_init)
    else:
        raise ConfigError(f"method must be ward or kmeans, got {cfg.method!r}")

    sizes = parcellation.sizes
    report = RunReport("cluster", {"method": cfg.method, "n_clusters": parcellation.n_clusters,
                                   "feasible": parcellation.feasible,
                                   "n_regions": count_regions(parcellation.labels, mask)})
    if parcellation.inertia is not None:
        report.metrics["inertia"] = parcellation.inertia
    report.table = [{"cluster": c, "n_voxels": int(n)} for c, n in enumerate(sizes)]
    report.add(write_records(report.table, cfg.out_dir / "cluster_sizes.csv"))
    # label 0 stays "outside the mask" in the volume
    label_vol = write_map(report, cfg, parcellation.labels + 1.0, mask, "cluster_labels", render=False)
    report.add(render_label_slice(label_vol, cfg.axis, slice_index(cfg, label_vol), cfg.out_dir / "cluster_labels.pgm",
                                  seed=cfg.seed))
    if cfg.method == "ward":
        signals = agglomeration_transform(parcellation, apply_mask(vol, mask))
        report.add(write_matrix(signals, cfg.out_dir / "cluster_signals.csv",
                                [f"cluster_{c}" for c in range(parcellation.n_clusters)]))
    return report


# =============================================================================
# SYNTHETIC DATA AND RENDERING
# =============================================================================

def run_synth(cfg: PipelineConfig) -> RunReport:
    from src.ingestion import synthetic

    out = cfg.out_dir
    report = RunReport("synth", {"dataset": cfg.dataset, "seed": cfg.seed})
    if cfg.dataset == "decoding":
        ds = synthetic.make_decoding(cfg.shape, cfg.n_per_class, cfg.snr, cfg.seed)
        write_nifti(ds.volume, report.add(out / "bold.nii"))
        write_nifti(ds.head.to_volume(), report.add(out / "mask.nii"))
        write_nifti(ds.truth_mask.to_volume(), report.add(out / "truth.nii"))
        report.add(write_labels(ds.labels, out / "labels.csv"))
        report.metrics.update(n_trials=len(ds.labels), n_truth_voxels=int(ds.truth_support.sum()))
    elif cfg.dataset == "encoding":
        ds = synthetic.make_encoding(cfg.n_trials, cfg.n_voxels, cfg.noise_sigma, cfg.seed)
        write_nifti(ds.volume, report.add(out / "bold.nii"))
        write_nifti(ds.mask.to_volume(), report.add(out / "mask.nii"))
        n_pixels = ds.stimuli.shape[1]
        report.add(write_matrix(ds.stimuli, out / "stimuli.csv", [f"p{j:02d}" for j in range(n_pixels)]))
        report.add(write_matrix(ds.true_fields, out / "true_fields.csv", [f"p{j:02d}" for j in range(n_pixels)]))
        report.metrics.update(n_trials=cfg.n_trials, n_afferent=int(ds.afferent.sum()))
    elif cfg.dataset == "rest":
        ds = synthetic.make_rest(cfg.n_subjects, cfg.nt, cfg.shape, cfg.n_networks, cfg.seed)
        for s in range(len(ds.subjects)):
            write_nifti(ds.subject_volume(s), report.add(out / f"subject_{s:02d}.nii"))
        write_nifti(ds.mask.to_volume(), report.add(out / "mask.nii"))
        write_nifti(unmask(ds.true_maps, ds.mask), report.add(out / "truth.nii"))
        report.metrics.update(n_subjects=cfg.n_subjects, n_networks=cfg.n_networks)
    else:
        raise ConfigError(f"dataset must be decoding, encoding or rest, got {cfg.dataset!r}")
    return report


def run_render(cfg: PipelineConfig) -> RunReport:
    """One PGM slice of the first --data volume, over --background when given."""
    vol = load_volume(cfg)
    first = Volume4D(vol.data[..., :1], vol.affine)
    out = cfg.out_dir / f"{Path(cfg.data[0]).name.split('.')[0]}.pgm"
    report = RunReport("render", {"axis": cfg.axis, "slice": slice_index(cfg, vol)})
    report.add(render_slice(first, load_background(cfg, vol), cfg.axis, slice_index(cfg, vol), out))
    return report
