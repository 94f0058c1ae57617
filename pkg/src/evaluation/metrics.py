"""
Metrics computation for decoding and encoding evaluation.
"""
from dataclasses import dataclass
from typing import Dict, List, Sequence

import numpy as np

from src.errors import BadShape, LengthMismatch, ShapeMismatch


def r2_score_per_target(Y_true, Y_pred) -> np.ndarray:
    """
    Predictive r2 per column: 1 - SS_res / SS_tot.

    SS_tot uses the mean of Y_true itself (the held-out set); columns with
    SS_tot = 0 score 0.
    """
    Y_true = np.asarray(Y_true, dtype=np.float64)
    Y_pred = np.asarray(Y_pred, dtype=np.float64)
    if Y_true.shape != Y_pred.shape:
        raise ShapeMismatch(f"Y_true {Y_true.shape} and Y_pred {Y_pred.shape} differ")
    if Y_true.ndim == 1:
        Y_true, Y_pred = Y_true[:, np.newaxis], Y_pred[:, np.newaxis]
    if Y_true.shape[0] < 2:
        raise BadShape("r2 needs at least 2 samples")

    ss_res = ((Y_true - Y_pred) ** 2).sum(axis=0)
    ss_tot = ((Y_true - Y_true.mean(axis=0)) ** 2).sum(axis=0)
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(ss_tot > 0, 1.0 - ss_res / ss_tot, 0.0)


def accuracy_score(labels_true, labels_pred) -> float:
    """Fraction of exact matches."""
    a = np.asarray(labels_true).ravel()
    b = np.asarray(labels_pred).ravel()
    if a.shape != b.shape:
        raise LengthMismatch(f"{a.size} true labels vs {b.size} predictions")
    if a.size == 0:
        return 0.0
    return float(np.mean(a == b))


@dataclass
class ScoreSummary:
    """Summary of per-fold (or per-pixel) scores."""
    scores: List[float]
    mean: float
    std: float  # n-1 denominator

    @property
    def n(self) -> int:
        return len(self.scores)

    def to_dict(self) -> Dict:
        return {
            "n": self.n,
            "mean": self.mean,
            "std": self.std,
            "scores": self.scores,
        }

    def __str__(self) -> str:
        return f"{self.mean:.2f} ± {self.std:.2f}"


def summarize_scores(scores: Sequence[float]) -> ScoreSummary:
    """Arithmetic mean and sample standard deviation (0 for a single score)."""
    values = [float(s) for s in scores]
    if not values:
        return ScoreSummary(scores=[], mean=0.0, std=0.0)
    std = float(np.std(values, ddof=1)) if len(values) > 1 else 0.0
    return ScoreSummary(scores=values, mean=float(np.mean(values)), std=std)


def format_scores_report(rows: Dict[str, ScoreSummary], title: str = "") -> str:
    """Format score summaries as a markdown table."""
    lines = []

    if title:
        lines.append(f"# Evaluation Report: {title}")
    else:
        lines.append("# Evaluation Report")

    lines.append("")
    lines.append("| Setting | Mean | Std | N |")
    lines.append("|---------|------|-----|---|")
    for name, summary in rows.items():
        lines.append(f"| {name} | {summary.mean:.3f} | {summary.std:.3f} | {summary.n} |")

    return "\n".join(lines)
