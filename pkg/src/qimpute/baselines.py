"""Classical imputation baselines: mean/mode, k-NN, and iterative ridge.

All three are deterministic, leave observed cells untouched cell-exact,
and ignore text columns entirely (text is neither predictor nor target).
Numeric features are min-max normalized internally from observed cells.

The iterative ridge baseline is a deterministic single-pass stand-in for
chained-equation imputation: columns are swept in schema order, each
fitted by closed-form ridge regression on the rows observed in the target,
until the mean absolute change falls below tolerance.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import FitError
from .tabular import ColumnKind, Mask, Table, missing_mask


@dataclass(frozen=True)
class BaselineConfig:
    method: str = "mean_mode"  # mean_mode | knn | iterative_ridge
    k: int = 5
    ridge_lambda: float = 1.0
    max_sweeps: int = 10
    tolerance: float = 1e-4

    def __post_init__(self):
        if self.k < 1:
            raise ValueError(f"k must be >= 1, got {self.k}")
        if self.ridge_lambda <= 0.0:
            raise ValueError(f"ridge_lambda must be > 0, got {self.ridge_lambda}")
        if self.max_sweeps < 1:
            raise ValueError(f"max_sweeps must be >= 1, got {self.max_sweeps}")


class _Frame:
    """Numeric/categorical views of a masked table, shared by the baselines."""

    def __init__(self, table: Table, mask: Mask):
        schema = table.schema
        self.table = table
        self.schema = schema
        self.observed = ~(missing_mask(table).matrix | mask.matrix)
        self.numeric_cols = list(schema.indices_of(ColumnKind.NUMERIC))
        self.categorical_cols = list(schema.indices_of(ColumnKind.CATEGORICAL))
        n_rows = table.n_rows

        self.num_values = np.full((n_rows, len(self.numeric_cols)), np.nan)
        self.num_norm = np.full((n_rows, len(self.numeric_cols)), np.nan)
        self.num_stats: list[tuple[float, float]] = []
        for slot, j in enumerate(self.numeric_cols):
            observed_vals = [
                table.rows[r][j] for r in range(n_rows) if self.observed[r, j]
            ]
            if not observed_vals:
                raise FitError(
                    f"column {schema.columns[j].name!r} has no observed values"
                )
            vmin, vmax = float(min(observed_vals)), float(max(observed_vals))
            self.num_stats.append((vmin, vmax))
            span = vmax - vmin
            for r in range(n_rows):
                if self.observed[r, j]:
                    v = table.rows[r][j]
                    self.num_values[r, slot] = v
                    self.num_norm[r, slot] = (v - vmin) / span if span > 0 else 0.0

        self.vocabularies: list[tuple[str, ...]] = []
        self.cat_idx = np.full((n_rows, len(self.categorical_cols)), -1, dtype=int)
        for slot, j in enumerate(self.categorical_cols):
            vocab: list[str] = []
            seen = set()
            for r in range(n_rows):
                if self.observed[r, j]:
                    v = table.rows[r][j]
                    if v not in seen:
                        seen.add(v)
                        vocab.append(v)
            if not vocab:
                raise FitError(
                    f"column {schema.columns[j].name!r} has no observed values"
                )
            self.vocabularies.append(tuple(vocab))
            index = {v: i for i, v in enumerate(vocab)}
            for r in range(n_rows):
                if self.observed[r, j]:
                    self.cat_idx[r, slot] = index[table.rows[r][j]]

    def column_mean(self, slot: int) -> float:
        col = self.num_values[:, slot]
        return float(np.nanmean(col))

    def column_mode(self, slot: int) -> str:
        """Most frequent observed category; ties resolve to vocabulary order."""
        vocab = self.vocabularies[slot]
        col = self.cat_idx[:, slot]
        counts = np.bincount(col[col >= 0], minlength=len(vocab))
        return vocab[int(np.argmax(counts))]

    def completed(self, fill: dict[tuple[int, int], float | str]) -> Table:
        out = self.table.copy()
        for (r, j), value in fill.items():
            out.rows[r][j] = value
        return out

    def targets(self):
        """(row, column) pairs needing imputation, numeric + categorical only."""
        pairs = []
        for j in self.numeric_cols + self.categorical_cols:
            for r in range(self.table.n_rows):
                if not self.observed[r, j] :
                    pairs.append((r, j))
        return pairs


def mean_mode_impute(table: Table, mask: Mask) -> Table:
    """Numeric missing cells get the observed column mean, categorical the mode."""
    frame = _Frame(table, mask)
    fill: dict[tuple[int, int], float | str] = {}
    means = {j: frame.column_mean(s) for s, j in enumerate(frame.numeric_cols)}
    modes = {j: frame.column_mode(s) for s, j in enumerate(frame.categorical_cols)}
    for r, j in frame.targets():
        fill[(r, j)] = means[j] if j in means else modes[j]
    return frame.completed(fill)


def knn_impute(table: Table, mask: Mask, k: int = 5) -> Table:
    """Neighbor-based imputation over mixed-type row distances.

    Distance between two rows is the Euclidean distance over mutually
    observed normalized numeric features plus the Hamming distance over
    mutually observed categoricals, divided by the number of shared
    observed features; rows sharing nothing are infinitely far. Neighbors
    are the k nearest rows observed in the target column (ties broken by
    row index); numeric targets take the neighbor mean, categorical the
    neighbor mode. With no candidate rows the value falls back to the
    column mean/mode.
    """
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    frame = _Frame(table, mask)
    n_rows = table.n_rows
    num_obs = ~np.isnan(frame.num_norm)
    cat_obs = frame.cat_idx >= 0
    num_slot = {j: s for s, j in enumerate(frame.numeric_cols)}
    cat_slot = {j: s for s, j in enumerate(frame.categorical_cols)}
    means = {j: frame.column_mean(s) for s, j in enumerate(frame.numeric_cols)}
    modes = {j: frame.column_mode(s) for s, j in enumerate(frame.categorical_cols)}

    # Distances only depend on the query row (the target column is never
    # mutually observed), so compute each row's distance vector once.
    distance_cache: dict[int, np.ndarray] = {}

    def distances_from(r: int) -> np.ndarray:
        if r in distance_cache:
            return distance_cache[r]
        shared_num = num_obs[r][None, :] & num_obs
        diffs = np.where(shared_num, frame.num_norm[r][None, :] - frame.num_norm, 0.0)
        euclid = np.sqrt(np.nansum(diffs**2, axis=1))
        shared_cat = cat_obs[r][None, :] & cat_obs
        hamming = (shared_cat & (frame.cat_idx[r][None, :] != frame.cat_idx)).sum(axis=1)
        counts = shared_num.sum(axis=1) + shared_cat.sum(axis=1)
        with np.errstate(divide="ignore", invalid="ignore"):
            d = np.where(counts > 0, (euclid + hamming) / counts, np.inf)
        d[r] = np.inf  # a row is not its own neighbor
        distance_cache[r] = d
        return d

    fill: dict[tuple[int, int], float | str] = {}
    for r, j in frame.targets():
        d = distances_from(r)
        candidates = np.flatnonzero(frame.observed[:, j] & np.isfinite(d))
        if candidates.size == 0:
            fill[(r, j)] = means[j] if j in num_slot else modes[j]
            continue
        order = candidates[np.lexsort((candidates, d[candidates]))]
        neighbors = order[:k]
        if j in num_slot:
            fill[(r, j)] = float(
                np.mean(frame.num_values[neighbors, num_slot[j]])
            )
        else:
            slot = cat_slot[j]
            vocab = frame.vocabularies[slot]
            counts = np.bincount(frame.cat_idx[neighbors, slot], minlength=len(vocab))
            fill[(r, j)] = vocab[int(np.argmax(counts))]
    return frame.completed(fill)


def iterative_ridge_impute(table: Table, mask: Mask, config: BaselineConfig) -> Table:
    """Chained closed-form ridge sweeps; see :func:`iterative_ridge_with_trace`."""
    completed, _, _ = iterative_ridge_with_trace(table, mask, config)
    return completed


def iterative_ridge_with_trace(
    table: Table, mask: Mask, config: BaselineConfig
) -> tuple[Table, list[float], bool]:
    """Ridge sweeps plus the mean-absolute-change sequence and convergence flag.

    Starts from mean/mode fills, then repeatedly re-fits each incomplete
    column (schema order, Gauss-Seidel style) on the rows observed in that
    column, predicting its missing cells from normalized numeric and
    one-hot categorical predictors. Intercepts are handled by centering,
    so a column with no informative predictors falls back to its mean.
    """
    frame = _Frame(table, mask)
    n_rows = table.n_rows
    num_slot = {j: s for s, j in enumerate(frame.numeric_cols)}
    cat_slot = {j: s for s, j in enumerate(frame.categorical_cols)}

    # Working state in normalized space, initialized with mean/mode.
    work_num = frame.num_norm.copy()
    for s, j in enumerate(frame.numeric_cols):
        col = work_num[:, s]
        col[np.isnan(col)] = np.nanmean(frame.num_norm[:, s])
    work_cat = frame.cat_idx.copy()
    for s, j in enumerate(frame.categorical_cols):
        mode_idx = frame.vocabularies[s].index(frame.column_mode(s))
        work_cat[work_cat[:, s] < 0, s] = mode_idx

    target_cols = [
        j
        for j in frame.numeric_cols + frame.categorical_cols
        if not frame.observed[:, j].all()
    ]
    target_cols.sort()  # schema order

    def predictor_matrix(exclude: int) -> np.ndarray:
        parts = []
        for s, j in enumerate(frame.numeric_cols):
            if j != exclude:
                parts.append(work_num[:, s : s + 1])
        for s, j in enumerate(frame.categorical_cols):
            if j != exclude:
                width = len(frame.vocabularies[s])
                onehot = np.zeros((n_rows, width))
                onehot[np.arange(n_rows), work_cat[:, s]] = 1.0
                parts.append(onehot)
        if not parts:
            return np.zeros((n_rows, 0))
        return np.concatenate(parts, axis=1)

    def ridge_predict(x_train, y_train, x_all):
        """Centered closed-form ridge; multi-target when y has 2 dims."""
        x_mean = x_train.mean(axis=0)
        y_mean = y_train.mean(axis=0)
        xc = x_train - x_mean
        yc = y_train - y_mean
        gram = xc.T @ xc + config.ridge_lambda * np.eye(x_train.shape[1])
        beta = np.linalg.solve(gram, xc.T @ yc)
        return y_mean + (x_all - x_mean) @ beta

    changes: list[float] = []
    converged = False
    for _ in range(config.max_sweeps):
        deltas: list[float] = []
        for j in target_cols:
            missing_rows = np.flatnonzero(~frame.observed[:, j])
            train_rows = np.flatnonzero(frame.observed[:, j])
            x = predictor_matrix(exclude=j)
            if j in num_slot:
                s = num_slot[j]
                if x.shape[1] == 0:
                    preds = np.full(n_rows, frame.num_norm[train_rows, s].mean())
                else:
                    preds = ridge_predict(
                        x[train_rows], frame.num_norm[train_rows, s], x
                    )
                new = preds[missing_rows]
                deltas.extend(np.abs(new - work_num[missing_rows, s]).tolist())
                work_num[missing_rows, s] = new
            else:
                s = cat_slot[j]
                vocab = frame.vocabularies[s]
                onehot = np.zeros((train_rows.size, len(vocab)))
                onehot[np.arange(train_rows.size), frame.cat_idx[train_rows, s]] = 1.0
                if x.shape[1] == 0:
                    scores = np.tile(onehot.mean(axis=0), (n_rows, 1))
                else:
                    scores = ridge_predict(x[train_rows], onehot, x)
                new = np.argmax(scores[missing_rows], axis=1)
                deltas.extend(
                    (new != work_cat[missing_rows, s]).astype(float).tolist()
                )
                work_cat[missing_rows, s] = new
        change = float(np.mean(deltas)) if deltas else 0.0
        changes.append(change)
        if change < config.tolerance:
            converged = True
            break

    fill: dict[tuple[int, int], float | str] = {}
    for r, j in frame.targets():
        if j in num_slot:
            s = num_slot[j]
            vmin, vmax = frame.num_stats[s]
            fill[(r, j)] = float(work_num[r, s] * (vmax - vmin) + vmin)
        else:
            s = cat_slot[j]
            fill[(r, j)] = frame.vocabularies[s][int(work_cat[r, s])]
    return frame.completed(fill), changes, converged
