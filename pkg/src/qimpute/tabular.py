"""Tabular data model: typed schemas, cell-level tables, missingness masks, CSV io.

A cell is either a finite float (numeric columns), a string (categorical
and text columns), or ``None`` for missing. Masks are boolean overlays on
top of a table: ``True`` marks a cell as missing or held out. Injected
masks only ever cover cells that were observed in the source table.
"""

from __future__ import annotations

import csv
import hashlib
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .errors import CsvLoadError, QimputeError
from .rng import MASK, substream

CellValue = float | str | None


class ColumnKind(Enum):
    NUMERIC = "numeric"
    CATEGORICAL = "categorical"
    TEXT = "text"


@dataclass(frozen=True)
class ColumnSpec:
    name: str
    kind: ColumnKind


@dataclass(frozen=True)
class DatasetSchema:
    """Ordered column descriptors plus the token used for missing cells."""

    columns: tuple[ColumnSpec, ...]
    missing_token: str = ""
    name: str = "dataset"

    def __post_init__(self):
        if not self.columns:
            raise ValueError("schema needs at least one column")
        names = [c.name for c in self.columns]
        if len(set(names)) != len(names):
            raise ValueError(f"duplicate column names in schema: {names}")

    @property
    def n_columns(self) -> int:
        return len(self.columns)

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(c.name for c in self.columns)

    def kind(self, index: int) -> ColumnKind:
        return self.columns[index].kind

    def index(self, name: str) -> int:
        for i, c in enumerate(self.columns):
            if c.name == name:
                return i
        raise KeyError(f"no column named {name!r}")

    def indices_of(self, kind: ColumnKind) -> tuple[int, ...]:
        return tuple(i for i, c in enumerate(self.columns) if c.kind == kind)


@dataclass
class Table:
    """Row-major cell storage conforming to a schema."""

    schema: DatasetSchema
    rows: list[list[CellValue]]

    def __post_init__(self):
        n_cols = self.schema.n_columns
        for r, row in enumerate(self.rows):
            if len(row) != n_cols:
                raise ValueError(
                    f"row {r} has {len(row)} cells, schema has {n_cols} columns"
                )
        for j in self.schema.indices_of(ColumnKind.NUMERIC):
            for r, row in enumerate(self.rows):
                v = row[j]
                if v is None:
                    continue
                if not isinstance(v, float) or not np.isfinite(v):
                    raise ValueError(
                        f"numeric cell at row {r}, column "
                        f"{self.schema.columns[j].name!r} is not a finite float: {v!r}"
                    )

    @property
    def n_rows(self) -> int:
        return len(self.rows)

    def cell(self, row: int, col: int) -> CellValue:
        return self.rows[row][col]

    def column(self, col: int) -> list[CellValue]:
        return [row[col] for row in self.rows]

    def copy(self) -> "Table":
        return Table(self.schema, [list(row) for row in self.rows])

    def content_hash(self) -> str:
        """Stable digest of schema + every cell; used for determinism checks."""
        h = hashlib.sha256()
        h.update(self.schema.name.encode())
        for spec in self.schema.columns:
            h.update(f"{spec.name}:{spec.kind.value};".encode())
        for row in self.rows:
            for v in row:
                h.update(_canonical_cell(v).encode())
                h.update(b"\x1f")
            h.update(b"\x1e")
        return h.hexdigest()


def _canonical_cell(v: CellValue) -> str:
    if v is None:
        return "\x00missing"
    if isinstance(v, float):
        return format(v, ".17g")
    return "s" + v


class MaskProvenance(Enum):
    NATIVE = "native"
    INJECTED_MCAR = "mcar"
    INJECTED_MNAR = "mnar"
    MIXED = "mixed"


@dataclass
class Mask:
    """Boolean missing/held-out overlay; True marks a masked cell."""

    matrix: np.ndarray
    provenance: MaskProvenance = MaskProvenance.NATIVE

    def __post_init__(self):
        self.matrix = np.asarray(self.matrix, dtype=bool)
        if self.matrix.ndim != 2:
            raise ValueError(f"mask must be 2-d, got shape {self.matrix.shape}")

    @property
    def count(self) -> int:
        return int(self.matrix.sum())

    def content_hash(self) -> str:
        return hashlib.sha256(np.packbits(self.matrix).tobytes()).hexdigest()

    @staticmethod
    def union(*masks: "Mask") -> "Mask":
        if not masks:
            raise ValueError("union of no masks")
        combined = masks[0].matrix.copy()
        for m in masks[1:]:
            if m.matrix.shape != combined.shape:
                raise ValueError("mask shapes differ")
            combined |= m.matrix
        tags = {m.provenance for m in masks}
        prov = tags.pop() if len(tags) == 1 else MaskProvenance.MIXED
        return Mask(combined, prov)


def missing_mask(table: Table) -> Mask:
    """Mask of the cells that are natively missing in the table."""
    matrix = np.array(
        [[cell is None for cell in row] for row in table.rows], dtype=bool
    ).reshape(table.n_rows, table.schema.n_columns)
    return Mask(matrix, MaskProvenance.NATIVE)


def apply_mask(table: Table, mask: Mask) -> Table:
    """Blank every masked cell, returning a new working table."""
    if mask.matrix.shape != (table.n_rows, table.schema.n_columns):
        raise ValueError(
            f"mask shape {mask.matrix.shape} does not match table "
            f"({table.n_rows}, {table.schema.n_columns})"
        )
    rows = [
        [None if mask.matrix[r, c] else v for c, v in enumerate(row)]
        for r, row in enumerate(table.rows)
    ]
    return Table(table.schema, rows)


def inject_mcar(table: Table, rate: float, seed: int) -> Mask:
    """Mark observed non-text cells missing, each independently with ``rate``.

    Text cells are exempt (they are never imputation targets), as are cells
    already missing. Deterministic per seed; the draw order is row-major
    over the full table so the mask is independent of which cells happen
    to be observed.
    """
    if not 0.0 <= rate <= 1.0:
        raise ValueError(f"rate must be in [0, 1], got {rate}")
    n_rows, n_cols = table.n_rows, table.schema.n_columns
    rng = substream(seed, MASK)
    draws = rng.random((n_rows, n_cols))
    eligible = ~missing_mask(table).matrix
    for j in table.schema.indices_of(ColumnKind.TEXT):
        eligible[:, j] = False
    return Mask((draws < rate) & eligible, MaskProvenance.INJECTED_MCAR)


# ---------------------------------------------------------------------------
# Schema and CSV files
# ---------------------------------------------------------------------------

_KIND_BY_NAME = {k.value: k for k in ColumnKind}


def save_schema(schema: DatasetSchema, path) -> None:
    """Plain-text schema file: directives, then one ``name:kind`` line per column."""
    lines = [f"dataset={schema.name}", f"missing_token={schema.missing_token}"]
    lines += [f"{c.name}:{c.kind.value}" for c in schema.columns]
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def load_schema(path) -> DatasetSchema:
    name = "dataset"
    missing_token = ""
    columns: list[ColumnSpec] = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.rstrip("\r\n")
            if not line.strip() or line.lstrip().startswith("#"):
                continue
            if line.startswith("dataset="):
                name = line[len("dataset="):]
            elif line.startswith("missing_token="):
                missing_token = line[len("missing_token="):]
            else:
                col_name, sep, kind_name = line.rpartition(":")
                if not sep or kind_name not in _KIND_BY_NAME:
                    raise QimputeError(
                        f"{path}: line {lineno}: expected 'name:kind' with kind in "
                        f"{sorted(_KIND_BY_NAME)}, got {line!r}"
                    )
                columns.append(ColumnSpec(col_name, _KIND_BY_NAME[kind_name]))
    if not columns:
        raise QimputeError(f"{path}: schema file defines no columns")
    return DatasetSchema(tuple(columns), missing_token=missing_token, name=name)


def load_csv(path, schema: DatasetSchema) -> Table:
    """Parse a CSV against the schema.

    The header row must match the schema names in order. A field equal to
    the schema's missing token (or empty) loads as missing. Numeric parse
    failures, header mismatches and ragged rows are fatal, with 1-based
    row/column coordinates in the error.
    """
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise CsvLoadError(f"{path}: file is empty") from None
        if tuple(header) != schema.names:
            raise CsvLoadError(
                f"{path}: header {header!r} does not match schema columns "
                f"{list(schema.names)!r}"
            )
        rows: list[list[CellValue]] = []
        for lineno, record in enumerate(reader, start=2):
            if len(record) != schema.n_columns:
                raise CsvLoadError(
                    f"{path}: ragged row with {len(record)} fields, "
                    f"expected {schema.n_columns}",
                    row=lineno,
                )
            row: list[CellValue] = []
            for j, text in enumerate(record):
                spec = schema.columns[j]
                if text == schema.missing_token or text == "":
                    row.append(None)
                elif spec.kind == ColumnKind.NUMERIC:
                    try:
                        value = float(text)
                    except ValueError:
                        raise CsvLoadError(
                            f"{path}: cannot parse {text!r} as a number",
                            row=lineno,
                            column=spec.name,
                        ) from None
                    if not np.isfinite(value):
                        raise CsvLoadError(
                            f"{path}: non-finite numeric value {text!r}",
                            row=lineno,
                            column=spec.name,
                        )
                    row.append(value)
                else:
                    row.append(text)
            rows.append(row)
    return Table(schema, rows)


def save_csv(table: Table, path) -> None:
    """Write the table; numeric cells carry 17 significant digits.

    Round-trips exactly through :func:`load_csv` provided no text cell
    equals the missing token.
    """
    schema = table.schema
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(schema.names)
        for row in table.rows:
            record = []
            for j, v in enumerate(row):
                if v is None:
                    record.append(schema.missing_token)
                elif schema.columns[j].kind == ColumnKind.NUMERIC:
                    record.append(format(v, ".17g"))
                else:
                    record.append(v)
            writer.writerow(record)


def save_mask(mask: Mask, schema: DatasetSchema, path) -> None:
    """Mask as CSV of 0/1 under the schema's column names."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(schema.names)
        for row in mask.matrix:
            writer.writerow(["1" if v else "0" for v in row])


def load_mask(path, schema: DatasetSchema, provenance=MaskProvenance.MIXED) -> Mask:
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if tuple(header) != schema.names:
            raise CsvLoadError(f"{path}: mask header does not match schema")
        matrix = [[field == "1" for field in record] for record in reader]
    return Mask(np.array(matrix, dtype=bool).reshape(-1, schema.n_columns), provenance)
