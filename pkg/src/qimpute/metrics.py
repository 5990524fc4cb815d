"""Imputation quality metrics: normalized RMSE and pooled macro F1.

Both metrics score imputed values against a truth table at the positions
selected by a mask, never anywhere else. RMSE operates in min-max
normalized space using the fitted preprocessing stats (raw-unit RMSE per
column is available separately for transparency). Macro F1 pools masked
categorical cells across columns, treating each (column, category) pair
as one class, and averages per-class F1 over the classes present in the
truth, with F1 = 0 whenever precision + recall = 0.
"""

from __future__ import annotations

import numpy as np

from .encoding import NumericColumnStats, PreprocessStats
from .tabular import ColumnKind, Mask, Table


def _normalize(value: float, stats: NumericColumnStats) -> float:
    span = stats.vmax - stats.vmin
    if span <= 0.0:
        return 0.0
    return (value - stats.vmin) / span


def rmse_numeric(
    imputed: Table, truth: Table, mask: Mask, stats: PreprocessStats
) -> float | None:
    """Root mean squared error over masked numeric cells, normalized space.

    Cells where the truth itself is missing are skipped. Returns None when
    no masked numeric cell has a truth value (absent, not zero).
    """
    schema = imputed.schema
    sq_errors: list[float] = []
    for j in schema.indices_of(ColumnKind.NUMERIC):
        col_stats = stats.for_column(schema.columns[j].name)
        assert isinstance(col_stats, NumericColumnStats)
        for r in np.flatnonzero(mask.matrix[:, j]):
            true_value = truth.rows[r][j]
            if true_value is None:
                continue
            pred = imputed.rows[r][j]
            if pred is None:
                raise ValueError(
                    f"imputed table still missing cell (row {r}, "
                    f"column {schema.columns[j].name!r})"
                )
            diff = _normalize(pred, col_stats) - _normalize(true_value, col_stats)
            sq_errors.append(diff * diff)
    if not sq_errors:
        return None
    return float(np.sqrt(np.mean(sq_errors)))


def rmse_raw_per_column(
    imputed: Table, truth: Table, mask: Mask
) -> dict[str, float]:
    """Raw-unit RMSE per numeric column over masked cells with truth."""
    schema = imputed.schema
    out: dict[str, float] = {}
    for j in schema.indices_of(ColumnKind.NUMERIC):
        sq: list[float] = []
        for r in np.flatnonzero(mask.matrix[:, j]):
            true_value = truth.rows[r][j]
            if true_value is None or imputed.rows[r][j] is None:
                continue
            sq.append((imputed.rows[r][j] - true_value) ** 2)
        if sq:
            out[schema.columns[j].name] = float(np.sqrt(np.mean(sq)))
    return out


def macro_f1_categorical(imputed: Table, truth: Table, mask: Mask) -> float | None:
    """Unweighted mean of per-class F1 over masked categorical cells.

    Classes are (column, category) pairs pooled across columns; only
    classes present in the truth enter the macro average. Returns None
    when no masked categorical cell has a truth value.
    """
    schema = imputed.schema
    tp: dict[tuple[int, str], int] = {}
    fp: dict[tuple[int, str], int] = {}
    fn: dict[tuple[int, str], int] = {}
    truth_classes: set[tuple[int, str]] = set()
    total = 0
    for j in schema.indices_of(ColumnKind.CATEGORICAL):
        for r in np.flatnonzero(mask.matrix[:, j]):
            true_value = truth.rows[r][j]
            if true_value is None:
                continue
            pred = imputed.rows[r][j]
            if pred is None:
                raise ValueError(
                    f"imputed table still missing cell (row {r}, "
                    f"column {schema.columns[j].name!r})"
                )
            total += 1
            true_key = (j, str(true_value))
            pred_key = (j, str(pred))
            truth_classes.add(true_key)
            if pred_key == true_key:
                tp[true_key] = tp.get(true_key, 0) + 1
            else:
                fp[pred_key] = fp.get(pred_key, 0) + 1
                fn[true_key] = fn.get(true_key, 0) + 1
    if total == 0:
        return None
    f1_values = []
    for key in sorted(truth_classes):
        tp_k = tp.get(key, 0)
        precision_den = tp_k + fp.get(key, 0)
        recall_den = tp_k + fn.get(key, 0)
        precision = tp_k / precision_den if precision_den else 0.0
        recall = tp_k / recall_den if recall_den else 0.0
        f1_values.append(
            2.0 * precision * recall / (precision + recall) if precision + recall else 0.0
        )
    return float(np.mean(f1_values))
