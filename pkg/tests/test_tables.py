import numpy as np
import pytest

from src.errors import BadShape, IoFailure
from src.ingestion.tables import read_labels, read_matrix, write_grid, write_labels, write_matrix, write_records


def test_labels_round_trip(tmp_path):
    path = write_labels(np.array([0, 1, 1, 0]), tmp_path / "labels.csv")
    assert path.read_bytes().startswith(b"index,label\r\n0,0\r\n")
    np.testing.assert_array_equal(read_labels(path), [0, 1, 1, 0])


def test_labels_are_sorted_by_index(tmp_path):
    path = tmp_path / "labels.csv"
    path.write_text("index,label\n2,face\n0,house\n1,face\n")
    np.testing.assert_array_equal(read_labels(path), ["house", "face", "face"])


@pytest.mark.parametrize("text", ["idx,label\n0,1\n", "index,label\n0,1\n2,0\n", ""])
def test_labels_rejects_bad_files(tmp_path, text):
    path = tmp_path / "labels.csv"
    path.write_text(text)
    with pytest.raises(BadShape):
        read_labels(path)


def test_missing_file_is_io_failure(tmp_path):
    with pytest.raises(IoFailure):
        read_labels(tmp_path / "nope.csv")


def test_matrix_round_trip(tmp_path):
    M = np.arange(6.0).reshape(2, 3) / 7.0
    path = write_matrix(M, tmp_path / "sub" / "m.csv")
    assert path.read_text().splitlines()[0] == "c0,c1,c2"
    np.testing.assert_allclose(read_matrix(path), M)


def test_matrix_rejects_text(tmp_path):
    path = tmp_path / "m.csv"
    path.write_text("a,b\n1,x\n")
    with pytest.raises(BadShape):
        read_matrix(path)
    path.write_text("a,b\n")
    with pytest.raises(BadShape):
        read_matrix(path)


def test_grid_has_no_header(tmp_path):
    path = write_grid(np.array([[1.0, 0.5], [0.0, 2.0 / 3.0]]), tmp_path / "g.csv")
    assert path.read_text().splitlines() == ["1,0.5", "0,0.666667"]


def test_records(tmp_path):
    path = write_records([{"fold": 0, "accuracy": 0.75}, {"fold": 1, "accuracy": 1.0}], tmp_path / "r.csv")
    assert path.read_text().splitlines() == ["fold,accuracy", "0,0.75", "1,1.0"]
