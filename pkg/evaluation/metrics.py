"""Agreement metrics between predicted and ground-truth ratings.

PLCC is ``scipy.stats.pearsonr``; SRCC is the Pearson correlation of
average ranks, so tied values share the mean of their rank span.
"""

import logging
import math
from decimal import Decimal, ROUND_HALF_UP
from pathlib import Path
from typing import List, Sequence, Tuple, Union

import numpy as np
from pydantic import BaseModel, Field
from scipy.stats import pearsonr, rankdata

from csv_utils import write_csv

logger = logging.getLogger(__name__)

GRID_MIN = 1.0
GRID_MAX = 5.0
_ONE_DECIMAL = Decimal("0.1")


class EvalReport(BaseModel):
    rmse: float = Field(ge=0)
    plcc: float = Field(ge=-1, le=1)
    srcc: float = Field(ge=-1, le=1)
    n: int = Field(ge=2)

    def as_row(self):
        return {"n": self.n, "rmse": self.rmse, "plcc": self.plcc, "srcc": self.srcc}


def _pair(preds: Sequence[float], targets: Sequence[float]) -> Tuple[np.ndarray, np.ndarray]:
    preds = np.asarray(preds, dtype=np.float64).ravel()
    targets = np.asarray(targets, dtype=np.float64).ravel()
    if preds.shape != targets.shape:
        raise ValueError(f"length mismatch: {preds.size} predictions vs {targets.size} targets")
    if preds.size < 2:
        raise ValueError("n ≥ 2 required")
    return preds, targets


def _pearson(x: np.ndarray, y: np.ndarray) -> float:
    """Callers rule out zero variance first."""
    r = float(pearsonr(x, y)[0])
    return min(1.0, max(-1.0, r))


def squared_errors(preds: Sequence[float], targets: Sequence[float]) -> np.ndarray:
    """Per-sample squared errors."""
    preds = np.asarray(preds, dtype=np.float64).ravel()
    targets = np.asarray(targets, dtype=np.float64).ravel()
    if preds.shape != targets.shape:
        raise ValueError(f"length mismatch: {preds.size} predictions vs {targets.size} targets")
    if preds.size == 0:
        raise ValueError("empty input: at least one prediction is required")
    return (preds - targets) ** 2


def rmse(preds: Sequence[float], targets: Sequence[float]) -> float:
    """Root mean squared error."""
    return math.sqrt(float(np.mean(squared_errors(preds, targets))))


def plcc(preds: Sequence[float], targets: Sequence[float]) -> float:
    """Pearson linear correlation; raises on zero variance."""
    x, y = _pair(preds, targets)
    if np.all(x == x[0]) or np.all(y == y[0]):
        raise ValueError("zero variance")
    return _pearson(x, y)


def srcc(preds: Sequence[float], targets: Sequence[float]) -> float:
    """Spearman rank correlation with average ranks for ties."""
    x, y = _pair(preds, targets)
    rank_x = rankdata(x, method="average")
    rank_y = rankdata(y, method="average")
    if np.all(rank_x == rank_x[0]) or np.all(rank_y == rank_y[0]):
        raise ValueError("zero rank variance")
    return _pearson(rank_x, rank_y)


def round_half_up(value: float) -> float:
    """Round to one decimal, halves away from zero."""
    return float(Decimal(repr(float(value))).quantize(_ONE_DECIMAL, rounding=ROUND_HALF_UP))


def density_grid(preds: Sequence[float], targets: Sequence[float]) -> List[Tuple[float, float, int]]:
    """Counts over the 41×41 grid of one-decimal (pred, target) bins.

    Only occupied cells are returned, sorted by (pred_bin, target_bin).
    """
    preds = np.asarray(preds, dtype=np.float64).ravel()
    targets = np.asarray(targets, dtype=np.float64).ravel()
    if preds.shape != targets.shape:
        raise ValueError(f"length mismatch: {preds.size} predictions vs {targets.size} targets")
    outside = [
        index for index in range(preds.size)
        if not (GRID_MIN <= preds[index] <= GRID_MAX and GRID_MIN <= targets[index] <= GRID_MAX)
    ]
    if outside:
        raise ValueError(f"values outside [{GRID_MIN}, {GRID_MAX}] at index {', '.join(map(str, outside))}")

    cells = {}
    for pred, target in zip(preds, targets):
        key = (round_half_up(pred), round_half_up(target))
        cells[key] = cells.get(key, 0) + 1
    return [(pred_bin, target_bin, count) for (pred_bin, target_bin), count in sorted(cells.items())]


def evaluate(preds: Sequence[float], targets: Sequence[float]) -> EvalReport:
    """RMSE, PLCC and SRCC in one report."""
    x, y = _pair(preds, targets)
    return EvalReport(rmse=rmse(x, y), plcc=plcc(x, y), srcc=srcc(x, y), n=x.size)


def write_eval_report(report: EvalReport, csv_path: Union[str, Path], text_path: Union[str, Path],
                      preamble: str = ""):
    """Single-line CSV plus a ``key=value`` text block."""
    write_csv(csv_path, ["n", "rmse", "plcc", "srcc"], [report.as_row()], preamble=preamble)
    lines = [f"# {preamble}"] if preamble else []
    lines += [f"{key}={value!r}" for key, value in report.as_row().items()]
    Path(text_path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def write_density_grid(cells: List[Tuple[float, float, int]], path: Union[str, Path], preamble: str = ""):
    """Write the occupied grid cells as CSV."""
    rows = [
        {"pred_bin": f"{pred_bin:.1f}", "target_bin": f"{target_bin:.1f}", "count": count}
        for pred_bin, target_bin, count in cells
    ]
    write_csv(path, ["pred_bin", "target_bin", "count"], rows, preamble=preamble)
