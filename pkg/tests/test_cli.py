import json

import numpy as np
import pytest
from typer.testing import CliRunner

from main import app
from src.imaging.nifti import read_nifti
from src.ingestion.tables import read_matrix, write_labels

runner = CliRunner()


def invoke(*args):
    return runner.invoke(app, [str(a) for a in args])


@pytest.fixture(scope="module")
def decoding_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("decoding")
    result = invoke("synth", "decoding", "--shape", "8,8,8", "--n-per-class", "12", "--snr", "4", "--out", out)
    assert result.exit_code == 0, result.output
    return out


@pytest.fixture(scope="module")
def encoding_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("encoding")
    result = invoke("synth", "encoding", "--n-trials", "300", "--n-voxels", "12", "--noise-sigma", "0.1",
                    "--out", out)
    assert result.exit_code == 0, result.output
    return out


def test_synth_decoding_files(decoding_dir):
    for name in ("bold.nii", "mask.nii", "truth.nii", "labels.csv", "synth_report.json"):
        assert (decoding_dir / name).exists()
    assert read_nifti(decoding_dir / "bold.nii").shape == (8, 8, 8, 24)


def test_decode(decoding_dir, tmp_path):
    result = invoke("decode", "--data", decoding_dir / "bold.nii", "--labels", decoding_dir / "labels.csv",
                    "--mask", decoding_dir / "mask.nii", "--k", "50", "--cv", "4", "--out", tmp_path)
    assert result.exit_code == 0, result.output
    report = json.loads((tmp_path / "decode_report.json").read_text())
    assert report["metrics"]["accuracy_mean"] >= 0.9
    assert report["metrics"]["n_nonzero_weights"] <= 50
    for name in ("decode_scores.csv", "decode_weights.nii", "decode_weights.pgm", "decode_fscores.nii"):
        assert (tmp_path / name).exists()


def test_decode_is_reproducible(decoding_dir, tmp_path):
    args = ["decode", "--data", decoding_dir / "bold.nii", "--labels", decoding_dir / "labels.csv",
            "--mask", decoding_dir / "mask.nii", "--k", "20", "--cv", "3", "--shuffle", "--seed", "4"]
    invoke(*args, "--out", tmp_path / "a")
    invoke(*args, "--out", tmp_path / "b")
    for name in ("decode_scores.csv", "decode_weights.nii", "decode_weights.pgm"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_searchlight_and_render(decoding_dir, tmp_path):
    result = invoke("searchlight", "--data", decoding_dir / "bold.nii", "--labels", decoding_dir / "labels.csv",
                    "--mask", decoding_dir / "mask.nii", "--radius-mm", "2", "--cv", "2", "--classifier",
                    "logreg_l2", "--out", tmp_path)
    assert result.exit_code == 0, result.output
    scores = tmp_path / "searchlight_scores.nii"
    assert read_nifti(scores).shape == (8, 8, 8, 1)

    result = invoke("render", "--data", scores, "--axis", "1", "--out", tmp_path / "img")
    assert result.exit_code == 0, result.output
    assert (tmp_path / "img" / "searchlight_scores.pgm").read_bytes().startswith(b"P5\n8 8\n255\n")


def test_cluster_ward_and_kmeans(decoding_dir, tmp_path):
    for method in ("ward", "kmeans"):
        out = tmp_path / method
        result = invoke("cluster", "--data", decoding_dir / "bold.nii", "--mask", decoding_dir / "mask.nii",
                        "--method", method, "--n-clusters", "6", "--n-init", "2", "--out", out)
        assert result.exit_code == 0, result.output
        labels = read_nifti(out / "cluster_labels.nii").data[..., 0]
        assert labels.max() == 6
        assert (out / "cluster_sizes.csv").exists()
        image = (out / "cluster_labels.pgm").read_bytes()
        header = b"P5\n8 8\n255\n"
        assert image.startswith(header)
        # six parcels plus the black outside-mask level
        assert len(set(image[len(header):])) <= 7
    assert read_matrix(tmp_path / "ward" / "cluster_signals.csv").shape == (24, 6)


def test_encode(encoding_dir, tmp_path):
    result = invoke("encode", "--data", encoding_dir / "bold.nii", "--stimuli", encoding_dir / "stimuli.csv",
                    "--mask", encoding_dir / "mask.nii", "--alpha", "1", "--cv", "3", "--n-top-voxels", "2",
                    "--out", tmp_path)
    assert result.exit_code == 0, result.output
    report = json.loads((tmp_path / "encode_report.json").read_text())
    assert report["metrics"]["r2_max"] > 0.5
    fields = sorted((tmp_path / "receptive_fields").glob("voxel_*.csv"))
    assert len(fields) == 2
    grid = np.loadtxt(fields[0], delimiter=",")
    assert grid.shape == (10, 10)


def test_decode_pixels_subset(encoding_dir, tmp_path):
    result = invoke("decode-pixels", "--data", encoding_dir / "bold.nii", "--stimuli", encoding_dir / "stimuli.csv",
                    "--mask", encoding_dir / "mask.nii", "--pixels", "0,55", "--c-grid", "0.01,1", "--cv", "3",
                    "--out", tmp_path)
    assert result.exit_code == 0, result.output
    summary = (tmp_path / "decode_pixels.csv").read_text().splitlines()
    assert summary[0] == "model,C=0.01,C=1"
    assert len(summary) == 5
    assert (tmp_path / "decode_pixels.md").read_text().startswith("# Evaluation Report")
    grid = np.loadtxt(tmp_path / "pixel_accuracy_logreg_l2.csv", delimiter=",")
    assert np.isfinite(grid).sum() == 2


def test_ica_with_truth(tmp_path):
    data_dir = tmp_path / "rest"
    result = invoke("synth", "rest", "--shape", "8,8,8", "--nt", "80", "--n-networks", "2", "--out", data_dir)
    assert result.exit_code == 0, result.output
    result = invoke("ica", "--data", data_dir / "subject_00.nii", "--data", data_dir / "subject_01.nii",
                    "--mask", data_dir / "mask.nii", "--n-components", "2", "--subject-dim", "4",
                    "--truth", data_dir / "truth.nii", "--out", tmp_path / "ica")
    assert result.exit_code == 0, result.output
    report = json.loads((tmp_path / "ica" / "ica_report.json").read_text())
    assert report["metrics"]["min_abs_correlation"] > 0.8
    assert read_nifti(tmp_path / "ica" / "ica_components.nii").shape == (8, 8, 8, 2)


# =============================================================================
# EXIT CODES
# =============================================================================

def test_missing_input_is_config_error(tmp_path):
    result = invoke("decode", "--data", tmp_path / "nope.nii", "--labels", tmp_path / "nope.csv")
    assert result.exit_code == 2


def test_invalid_option_value_is_config_error(decoding_dir, tmp_path):
    result = invoke("decode", "--data", decoding_dir / "bold.nii", "--labels", decoding_dir / "labels.csv",
                    "--cv", "1", "--out", tmp_path)
    assert result.exit_code == 2


def test_label_count_mismatch_is_data_error(decoding_dir, tmp_path):
    labels = write_labels(np.tile([0, 1], 5), tmp_path / "short.csv")
    result = invoke("decode", "--data", decoding_dir / "bold.nii", "--labels", labels, "--out", tmp_path)
    assert result.exit_code == 3


def test_bad_band_is_data_error(decoding_dir, tmp_path):
    result = invoke("decode", "--data", decoding_dir / "bold.nii", "--labels", decoding_dir / "labels.csv",
                    "--band", "0.2:0.1", "--out", tmp_path)
    assert result.exit_code == 3


def test_unknown_dataset(tmp_path):
    result = invoke("synth", "faces", "--out", tmp_path)
    assert result.exit_code == 2
