"""
CSV tables: labels, stimulus matrices, score grids and result records.

Labels files have the header ``index,label`` with one row per frame.
Matrix files carry a header row of column names and no index column.
"""
from pathlib import Path
from typing import Dict, List, Optional, Sequence

import numpy as np
import pandas as pd

from src.errors import BadShape, IoFailure

LABEL_COLUMNS = ["index", "label"]


def _read_csv(path: Path, **kwargs) -> pd.DataFrame:
    try:
        return pd.read_csv(path, **kwargs)
    except (pd.errors.ParserError, pd.errors.EmptyDataError, UnicodeDecodeError) as e:
        raise BadShape(f"cannot parse {path}: {e}") from e
    except OSError as e:
        raise IoFailure(f"cannot read {path}: {e}") from e


def _write_csv(df: pd.DataFrame, path: Path, **kwargs) -> Path:
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        df.to_csv(path, lineterminator="\r\n", **kwargs)
    except OSError as e:
        raise IoFailure(f"cannot write {path}: {e}") from e
    return path


# =============================================================================
# LABELS
# =============================================================================

def read_labels(path: Path) -> np.ndarray:
    """Label per frame, ordered by the index column."""
    df = _read_csv(Path(path))
    if list(df.columns) != LABEL_COLUMNS:
        raise BadShape(f"{path}: expected header {','.join(LABEL_COLUMNS)}, got {','.join(map(str, df.columns))}")
    df = df.sort_values("index", kind="stable")
    if not np.array_equal(df["index"].to_numpy(), np.arange(len(df))):
        raise BadShape(f"{path}: index column must be 0..{len(df) - 1}")
    return df["label"].to_numpy()


def write_labels(labels: Sequence, path: Path) -> Path:
    df = pd.DataFrame({"index": np.arange(len(labels)), "label": np.asarray(labels)})
    return _write_csv(df, path, index=False)


# =============================================================================
# MATRICES AND GRIDS
# =============================================================================

def read_matrix(path: Path) -> np.ndarray:
    """Numeric matrix with one header row."""
    df = _read_csv(Path(path))
    if df.empty:
        raise BadShape(f"{path}: no rows")
    try:
        return df.to_numpy(dtype=np.float64)
    except ValueError as e:
        raise BadShape(f"{path}: non-numeric entries") from e


def write_matrix(M: np.ndarray, path: Path, columns: Optional[Sequence[str]] = None) -> Path:
    M = np.atleast_2d(np.asarray(M))
    columns = list(columns) if columns is not None else [f"c{j}" for j in range(M.shape[1])]
    return _write_csv(pd.DataFrame(M, columns=columns), path, index=False)


def write_grid(grid: np.ndarray, path: Path) -> Path:
    """Headerless 2D grid (for example a 10x10 receptive field); missing cells are written as nan."""
    return _write_csv(pd.DataFrame(np.asarray(grid)), path, index=False, header=False, float_format="%.6g", na_rep="nan")


def write_records(records: List[Dict], path: Path) -> Path:
    return _write_csv(pd.DataFrame.from_records(records), path, index=False)
