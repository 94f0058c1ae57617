"""brainlearn CLI - machine learning pipelines for volumetric brain images."""
from pathlib import Path
from typing import Callable, List, Optional

import typer

app = typer.Typer(help="brainlearn - decoding, encoding, searchlight, ICA and clustering for brain volumes")

# =============================================================================
# SHARED OPTIONS
# Defaults are None so that values from --config are only overridden when given
# =============================================================================

CONFIG = typer.Option(None, "--config", "-c", help="Flat key=value config file")
SEED = typer.Option(None, "--seed", help="Random seed (default 0)")
OUT = typer.Option(None, "--out", "-o", help="Output directory (default results/)")
MASK = typer.Option(None, "--mask", help="Mask NIfTI (nonzero = in brain); computed when omitted")
DATA = typer.Option(None, "--data", "-d", help="Data NIfTI (repeat for several subjects)")
LABELS = typer.Option(None, "--labels", help="Labels CSV with header index,label")
STIMULI = typer.Option(None, "--stimuli", help="Stimulus matrix CSV, one row per frame")
BACKGROUND = typer.Option(None, "--background", help="Background NIfTI for PGM slices")
DETREND = typer.Option(None, "--detrend/--no-detrend", help="Remove linear trends per voxel")
STANDARDIZE = typer.Option(None, "--standardize/--no-standardize", help="Z-score each voxel")
BAND = typer.Option(None, "--band", help="Band-pass LOW:HIGH in Hz")
TR = typer.Option(None, "--tr", help="Repetition time in seconds")
AXIS = typer.Option(None, "--axis", help="Slice axis for PGM output (0, 1 or 2)")
SLICE = typer.Option(None, "--slice", help="Slice index (default: middle)")
VERBOSE = typer.Option(False, "--verbose", "-v", help="Debug logging")


def _common(config, seed, out, mask, data, labels=None, stimuli=None, background=None,
            detrend=None, standardize=None, band=None, tr=None, axis=None, slice_index=None) -> dict:
    return dict(config_path=config, seed=seed, out_dir=out, mask=mask, data=list(data) if data else None,
                labels=labels, stimuli=stimuli, background=background, detrend=detrend,
                standardize=standardize, band=band, tr_seconds=tr, axis=axis, slice_index=slice_index)


def _run(runner: Callable, verbose: bool, **options) -> None:
    """Build the config, run one analysis and print its summary; errors map to exit codes."""
    from config.pipeline import build_config, parse_band
    from src.errors import BrainLearnError
    from src.evaluation.runner import save_report
    from src.utils.console import print_error, setup_logging

    setup_logging(verbose)
    band = options.pop("band", None)
    try:
        if band:
            options["low_cut_hz"], options["high_cut_hz"] = parse_band(band)
        cfg = build_config(**options)
        report = runner(cfg)
        report.add(save_report(report, cfg.out_dir))
    except BrainLearnError as e:
        print_error(e.kind, e.detail)
        raise typer.Exit(e.exit_code)
    _print_report(report)


def _print_report(report) -> None:
    from rich.table import Table

    from src.utils.console import console

    table = Table(title=f"🧠 {report.command}")
    table.add_column("Metric", style="cyan")
    table.add_column("Value", justify="right")
    for key, value in report.metrics.items():
        shown = f"{value:.4f}" if isinstance(value, float) else str(value)
        table.add_row(key, shown)
    console.print(table)
    typer.echo(f"✅ Wrote {len(report.outputs)} files to {report.outputs[-1].parent}")


# =============================================================================
# COMMANDS
# =============================================================================

@app.command()
def synth(
    dataset: str = typer.Argument("decoding", help="decoding | encoding | rest"),
    shape: Optional[str] = typer.Option(None, "--shape", help="Grid size, e.g. 12,12,12"),
    n_per_class: Optional[int] = typer.Option(None, "--n-per-class", help="Trials per class (decoding)"),
    snr: Optional[float] = typer.Option(None, "--snr", help="Signal amplitude in noise units (decoding)"),
    n_trials: Optional[int] = typer.Option(None, "--n-trials", help="Stimulus presentations (encoding)"),
    n_voxels: Optional[int] = typer.Option(None, "--n-voxels", help="Voxels (encoding)"),
    noise_sigma: Optional[float] = typer.Option(None, "--noise-sigma", help="Noise sd (encoding)"),
    n_subjects: Optional[int] = typer.Option(None, "--n-subjects", help="Subjects (rest)"),
    nt: Optional[int] = typer.Option(None, "--nt", help="Frames per subject (rest)"),
    n_networks: Optional[int] = typer.Option(None, "--n-networks", help="Spatial networks (rest)"),
    config: Optional[Path] = CONFIG,
    seed: Optional[int] = SEED,
    out: Optional[Path] = OUT,
    verbose: bool = VERBOSE,
):
    """Write a synthetic dataset with its ground truth."""
    from src.evaluation.runner import run_synth

    _run(run_synth, verbose, config_path=config, seed=seed, out_dir=out, dataset=dataset, shape=shape,
         n_per_class=n_per_class, snr=snr, n_trials=n_trials, n_voxels=n_voxels, noise_sigma=noise_sigma,
         n_subjects=n_subjects, nt=nt, n_networks=n_networks)


@app.command()
def decode(
    classifier: Optional[str] = typer.Option(None, "--classifier", help="Estimator name from the registry"),
    C: Optional[float] = typer.Option(None, "--C", help="Inverse regularization"),
    k: Optional[int] = typer.Option(None, "--k", help="ANOVA-selected voxels"),
    percentile: Optional[float] = typer.Option(None, "--percentile", help="Select a percentile instead of k"),
    cv: Optional[int] = typer.Option(None, "--cv", help="Number of folds"),
    shuffle: Optional[bool] = typer.Option(None, "--shuffle/--no-shuffle", help="Shuffle before splitting"),
    config: Optional[Path] = CONFIG,
    seed: Optional[int] = SEED,
    out: Optional[Path] = OUT,
    mask: Optional[Path] = MASK,
    data: Optional[List[Path]] = DATA,
    labels: Optional[Path] = LABELS,
    background: Optional[Path] = BACKGROUND,
    detrend: Optional[bool] = DETREND,
    standardize: Optional[bool] = STANDARDIZE,
    band: Optional[str] = BAND,
    tr: Optional[float] = TR,
    axis: Optional[int] = AXIS,
    slice_index: Optional[int] = SLICE,
    verbose: bool = VERBOSE,
):
    """ANOVA + linear classifier decoding with a weight map."""
    from src.evaluation.runner import run_decode

    _run(run_decode, verbose, classifier=classifier, C=C, k=k, percentile=percentile, n_folds=cv, shuffle=shuffle,
         **_common(config, seed, out, mask, data, labels, None, background, detrend, standardize, band, tr,
                   axis, slice_index))


@app.command()
def encode(
    regressor: Optional[str] = typer.Option(None, "--regressor", help="ridge | lasso"),
    alpha: Optional[float] = typer.Option(None, "--alpha", help="Regularization strength"),
    cv: Optional[int] = typer.Option(None, "--cv", help="Number of folds"),
    n_top_voxels: Optional[int] = typer.Option(None, "--n-top-voxels", help="Voxels given receptive fields"),
    lars_max_iter: Optional[int] = typer.Option(None, "--lars-max-iter", help="LARS steps per path"),
    config: Optional[Path] = CONFIG,
    seed: Optional[int] = SEED,
    out: Optional[Path] = OUT,
    mask: Optional[Path] = MASK,
    data: Optional[List[Path]] = DATA,
    stimuli: Optional[Path] = STIMULI,
    background: Optional[Path] = BACKGROUND,
    detrend: Optional[bool] = DETREND,
    standardize: Optional[bool] = STANDARDIZE,
    verbose: bool = VERBOSE,
):
    """Stimulus-to-voxel encoding: r² map and receptive fields."""
    from src.evaluation.runner import run_encode

    _run(run_encode, verbose, regressor=regressor, alpha=alpha, encode_folds=cv, n_top_voxels=n_top_voxels,
         lars_max_iter=lars_max_iter,
         **_common(config, seed, out, mask, data, None, stimuli, background, detrend, standardize))


@app.command("decode-pixels")
def decode_pixels(
    c_grid: Optional[str] = typer.Option(None, "--c-grid", help="Comma-separated C values"),
    pixels: Optional[str] = typer.Option(None, "--pixels", help="Comma-separated pixel indices (default: all)"),
    cv: Optional[int] = typer.Option(None, "--cv", help="Number of folds"),
    config: Optional[Path] = CONFIG,
    seed: Optional[int] = SEED,
    out: Optional[Path] = OUT,
    mask: Optional[Path] = MASK,
    data: Optional[List[Path]] = DATA,
    stimuli: Optional[Path] = STIMULI,
    verbose: bool = VERBOSE,
):
    """Per-pixel decoding for four linear models over a C grid."""
    from src.evaluation.runner import run_decode_pixels

    _run(run_decode_pixels, verbose, c_grid=c_grid, pixels=pixels, n_folds=cv,
         **_common(config, seed, out, mask, data, None, stimuli))


@app.command()
def searchlight(
    radius_mm: Optional[float] = typer.Option(None, "--radius-mm", help="Sphere radius in millimeters"),
    classifier: Optional[str] = typer.Option(None, "--classifier", help="Estimator name from the registry"),
    C: Optional[float] = typer.Option(None, "--C", help="Inverse regularization"),
    cv: Optional[int] = typer.Option(None, "--cv", help="Number of folds"),
    n_jobs: Optional[int] = typer.Option(None, "--n-jobs", "-j", help="Worker threads"),
    config: Optional[Path] = CONFIG,
    seed: Optional[int] = SEED,
    out: Optional[Path] = OUT,
    mask: Optional[Path] = MASK,
    data: Optional[List[Path]] = DATA,
    labels: Optional[Path] = LABELS,
    background: Optional[Path] = BACKGROUND,
    axis: Optional[int] = AXIS,
    slice_index: Optional[int] = SLICE,
    verbose: bool = VERBOSE,
):
    """Cross-validated accuracy in a sphere around every voxel."""
    from src.evaluation.runner import run_searchlight

    _run(run_searchlight, verbose, radius_mm=radius_mm, classifier=classifier, C=C, n_folds=cv, n_jobs=n_jobs,
         **_common(config, seed, out, mask, data, labels, None, background, axis=axis, slice_index=slice_index))


@app.command()
def ica(
    n_components: Optional[int] = typer.Option(None, "--n-components", help="Spatial components"),
    subject_dim: Optional[int] = typer.Option(None, "--subject-dim", help="Per-subject PCA dimension"),
    truth: Optional[Path] = typer.Option(None, "--truth", help="NIfTI of true maps (one per frame) to match"),
    config: Optional[Path] = CONFIG,
    seed: Optional[int] = SEED,
    out: Optional[Path] = OUT,
    mask: Optional[Path] = MASK,
    data: Optional[List[Path]] = DATA,
    background: Optional[Path] = BACKGROUND,
    standardize: Optional[bool] = STANDARDIZE,
    verbose: bool = VERBOSE,
):
    """Group spatial ICA (concat-ICA) over one or more subjects."""
    from src.evaluation.runner import run_ica

    _run(run_ica, verbose, n_components=n_components, subject_dim=subject_dim, truth=truth,
         **_common(config, seed, out, mask, data, background=background, standardize=standardize))


@app.command()
def cluster(
    method: Optional[str] = typer.Option(None, "--method", help="ward | kmeans"),
    n_clusters: Optional[int] = typer.Option(None, "--n-clusters", help="Number of parcels"),
    n_init: Optional[int] = typer.Option(None, "--n-init", help="K-means restarts"),
    smooth: Optional[int] = typer.Option(None, "--smooth", help="Box-blur width in voxels before clustering"),
    pca_components: Optional[int] = typer.Option(None, "--pca-components", help="Temporal PCA reduction"),
    config: Optional[Path] = CONFIG,
    seed: Optional[int] = SEED,
    out: Optional[Path] = OUT,
    mask: Optional[Path] = MASK,
    data: Optional[List[Path]] = DATA,
    detrend: Optional[bool] = DETREND,
    standardize: Optional[bool] = STANDARDIZE,
    verbose: bool = VERBOSE,
):
    """Parcellate the masked voxels with Ward or K-means."""
    from src.evaluation.runner import run_cluster

    _run(run_cluster, verbose, method=method, n_clusters=n_clusters, n_init=n_init, smooth=smooth,
         pca_components=pca_components,
         **_common(config, seed, out, mask, data, detrend=detrend, standardize=standardize))


@app.command()
def render(
    interp: Optional[str] = typer.Option(None, "--interp", help="Background resampling: nearest | trilinear"),
    config: Optional[Path] = CONFIG,
    out: Optional[Path] = OUT,
    data: Optional[List[Path]] = DATA,
    background: Optional[Path] = BACKGROUND,
    axis: Optional[int] = AXIS,
    slice_index: Optional[int] = SLICE,
    verbose: bool = VERBOSE,
):
    """Render one slice of a map volume as a PGM image."""
    from src.evaluation.runner import run_render

    _run(run_render, verbose, interp=interp,
         **_common(config, None, out, None, data, background=background, axis=axis, slice_index=slice_index))


if __name__ == "__main__":
    app()
