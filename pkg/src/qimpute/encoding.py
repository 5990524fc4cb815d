"""Mixed-type cell encoding and the interchangeable cell-embedding variants.

Observed cells are first turned into classical feature vectors: numerics
become a single angle in [0, pi] via a fitted min-max map, categoricals a
pi-scaled one-hot, and text a deterministic hashed bag-of-words vector
rescaled per dimension to [0, pi]. From there one of three variants
produces the per-cell embedding:

* ``QUANTUM_IQP``: a fixed seeded linear projection maps the classical
  vector to circuit angles; the embedding is the circuit's vector of
  Pauli-Z expectations (always inside [-1, 1]).
* ``RANDOM_PROJECTION``: the same style of fixed seeded linear map,
  straight to the embedding space, no nonlinearity.
* ``CLASSICAL_MLP``: a small trainable perceptron whose weights live in
  the downstream model and train jointly; this module only supplies the
  (zero-padded) classical vectors.

Missing cells are never encoded; attempting to is a contract violation.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import ContractViolation, FitError, QimputeError
from .quantum import IqpParams, iqp_embed
from .rng import EMBED, PROJECTION, substream
from .tabular import CellValue, ColumnKind, DatasetSchema, Mask, Table, missing_mask

logger = logging.getLogger(__name__)

DEFAULT_TEXT_DIM = 16


class EmbedderVariant(Enum):
    QUANTUM_IQP = "quantum_iqp"
    CLASSICAL_MLP = "classical_mlp"
    RANDOM_PROJECTION = "random_projection"


# ---------------------------------------------------------------------------
# Preprocessing statistics
# ---------------------------------------------------------------------------


@dataclass
class NumericColumnStats:
    vmin: float
    vmax: float

    @property
    def degenerate(self) -> bool:
        return self.vmax == self.vmin


@dataclass
class CategoricalColumnStats:
    vocabulary: tuple[str, ...]
    unknown_seen: int = 0

    def index_of(self, category: str) -> int | None:
        try:
            return self.vocabulary.index(category)
        except ValueError:
            return None


@dataclass
class TextColumnStats:
    dim: int
    dim_min: np.ndarray
    dim_max: np.ndarray


ColumnStats = NumericColumnStats | CategoricalColumnStats | TextColumnStats


@dataclass
class PreprocessStats:
    """Per-column fit results, keyed by column name in schema order."""

    per_column: dict[str, ColumnStats]

    def for_column(self, name: str) -> ColumnStats:
        return self.per_column[name]

    def feature_width(self, name: str) -> int:
        stats = self.per_column[name]
        if isinstance(stats, NumericColumnStats):
            return 1
        if isinstance(stats, CategoricalColumnStats):
            return len(stats.vocabulary)
        return stats.dim


@dataclass(frozen=True)
class TextEmbeddings:
    """Precomputed text vectors keyed by (row index, column name).

    When supplied for a text column these override the hashing embedder,
    both at fit time and at encode time.
    """

    dim: int
    vectors: dict[tuple[int, str], np.ndarray]

    def lookup(self, row: int, column: str) -> np.ndarray | None:
        return self.vectors.get((row, column))


def load_text_embeddings(path) -> TextEmbeddings:
    """Load a precomputed-embedding CSV: row_id, column_name, e_0..e_{dim-1}."""
    import csv as _csv

    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = _csv.reader(fh)
        header = next(reader, None)
        if header is None or len(header) < 3 or header[:2] != ["row_id", "column_name"]:
            raise QimputeError(
                f"{path}: expected header row_id,column_name,e_0,... got {header!r}"
            )
        dim = len(header) - 2
        expected = [f"e_{i}" for i in range(dim)]
        if header[2:] != expected:
            raise QimputeError(f"{path}: embedding columns must be e_0..e_{dim - 1}")
        vectors: dict[tuple[int, str], np.ndarray] = {}
        for record in reader:
            row_id = int(record[0])
            vec = np.array([float(x) for x in record[2:]], dtype=np.float64)
            vectors[(row_id, record[1])] = vec
    return TextEmbeddings(dim=dim, vectors=vectors)


def text_embed_hashing(text: str, dim: int) -> np.ndarray:
    """Deterministic signed bag-of-words feature hashing.

    Tokens are lowercased whitespace splits; each token's 64-bit FNV-1a
    hash selects a bucket (mod dim) and a sign (bit 63). Nonzero vectors
    are L2-normalized; empty or whitespace-only text gives the zero vector.
    """
    if dim < 1:
        raise ValueError(f"dim must be >= 1, got {dim}")
    out = np.zeros(dim, dtype=np.float64)
    for token in text.lower().split():
        h = _fnv1a_64(token.encode("utf-8"))
        sign = -1.0 if (h >> 63) & 1 else 1.0
        out[h % dim] += sign
    norm = np.linalg.norm(out)
    if norm > 0.0:
        out /= norm
    return out


def _fnv1a_64(data: bytes) -> int:
    h = 0xCBF29CE484222325
    for byte in data:
        h ^= byte
        h = (h * 0x100000001B3) & 0xFFFFFFFFFFFFFFFF
    return h


def fit_preprocessor(
    table: Table,
    schema: DatasetSchema,
    text_dim: int = DEFAULT_TEXT_DIM,
    text_embeddings: TextEmbeddings | None = None,
) -> PreprocessStats:
    """Fit normalization constants from observed cells only.

    Numeric columns record observed min/max, categoricals a vocabulary in
    first-appearance order, text columns the per-dimension range of the
    embedder output. A column with zero observed values is a fit error.
    """
    per_column: dict[str, ColumnStats] = {}
    for j, spec in enumerate(schema.columns):
        observed = [(r, row[j]) for r, row in enumerate(table.rows) if row[j] is not None]
        if not observed:
            raise FitError(f"column {spec.name!r} has no observed values")
        if spec.kind == ColumnKind.NUMERIC:
            values = [v for _, v in observed]
            per_column[spec.name] = NumericColumnStats(
                vmin=float(min(values)), vmax=float(max(values))
            )
        elif spec.kind == ColumnKind.CATEGORICAL:
            vocab: list[str] = []
            seen = set()
            for _, v in observed:
                if v not in seen:
                    seen.add(v)
                    vocab.append(v)
            per_column[spec.name] = CategoricalColumnStats(vocabulary=tuple(vocab))
        else:
            dim = text_embeddings.dim if text_embeddings is not None else text_dim
            raw = np.stack(
                [
                    _raw_text_vector(r, spec.name, v, dim, text_embeddings)
                    for r, v in observed
                ]
            )
            per_column[spec.name] = TextColumnStats(
                dim=dim, dim_min=raw.min(axis=0), dim_max=raw.max(axis=0)
            )
    return PreprocessStats(per_column=per_column)


def _raw_text_vector(
    row: int,
    column: str,
    value: str,
    dim: int,
    text_embeddings: TextEmbeddings | None,
) -> np.ndarray:
    if text_embeddings is not None:
        override = text_embeddings.lookup(row, column)
        if override is not None:
            if override.shape != (dim,):
                raise QimputeError(
                    f"text embedding for (row {row}, {column!r}) has shape "
                    f"{override.shape}, expected ({dim},)"
                )
            return override
    return text_embed_hashing(value, dim)


# ---------------------------------------------------------------------------
# Classical feature vectors
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ClassicalFeatureVector:
    values: np.ndarray
    column: str


def encode_cell(
    value: CellValue,
    kind: ColumnKind,
    stats: ColumnStats,
    column: str = "",
    raw_text: np.ndarray | None = None,
) -> ClassicalFeatureVector:
    """Observed cell -> classical feature vector with entries in [0, pi].

    ``raw_text`` lets callers substitute a precomputed text vector for the
    hashing default. Encoding a missing value is a contract violation, not
    a silent zero.
    """
    if value is None:
        raise ContractViolation(f"attempted to encode a missing cell in column {column!r}")
    if kind == ColumnKind.NUMERIC:
        assert isinstance(stats, NumericColumnStats)
        if stats.degenerate:
            angle = 0.0
        else:
            angle = np.pi * (float(value) - stats.vmin) / (stats.vmax - stats.vmin)
            angle = float(np.clip(angle, 0.0, np.pi))
        return ClassicalFeatureVector(np.array([angle]), column)
    if kind == ColumnKind.CATEGORICAL:
        assert isinstance(stats, CategoricalColumnStats)
        out = np.zeros(len(stats.vocabulary))
        idx = stats.index_of(str(value))
        if idx is None:
            stats.unknown_seen += 1
            logger.warning(
                "unknown category %r in column %r mapped to all-zeros", value, column
            )
        else:
            out[idx] = np.pi
        return ClassicalFeatureVector(out, column)
    assert isinstance(stats, TextColumnStats)
    raw = raw_text if raw_text is not None else text_embed_hashing(str(value), stats.dim)
    span = stats.dim_max - stats.dim_min
    with np.errstate(invalid="ignore", divide="ignore"):
        scaled = np.where(span > 0.0, (raw - stats.dim_min) / np.where(span > 0, span, 1.0), 0.0)
    return ClassicalFeatureVector(np.clip(scaled, 0.0, 1.0) * np.pi, column)


# ---------------------------------------------------------------------------
# Angle projection and embedding variants
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class AngleProjection:
    """Fixed seeded linear map from classical features to circuit angles."""

    matrix: np.ndarray
    seed: int

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=np.float64)
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @property
    def d_in(self) -> int:
        return self.matrix.shape[0]

    @property
    def d_out(self) -> int:
        return self.matrix.shape[1]


def make_angle_projection(seed: int, d_in: int, d_out: int, *keys: int) -> AngleProjection:
    """Entries uniform on [-1, 1] scaled by 1/sqrt(d_in); bitwise-reproducible."""
    rng = substream(seed, PROJECTION, d_in, d_out, *keys)
    matrix = rng.uniform(-1.0, 1.0, size=(d_in, d_out)) / np.sqrt(d_in)
    return AngleProjection(matrix=matrix, seed=seed)


def project_to_angles(
    x_c: ClassicalFeatureVector | np.ndarray,
    proj: AngleProjection,
    n_layers: int,
) -> IqpParams:
    """x -> angles: singles are the projected vector, pairs its outer products.

    The same angle set is replicated across all layers.
    """
    values = x_c.values if isinstance(x_c, ClassicalFeatureVector) else np.asarray(x_c)
    if values.shape != (proj.d_in,):
        raise ValueError(
            f"feature vector has shape {values.shape}, projection expects ({proj.d_in},)"
        )
    projected = values @ proj.matrix
    n = proj.d_out
    iu = np.triu_indices(n, k=1)
    pairs = (projected[:, None] * projected[None, :])[iu]
    return IqpParams.replicated(projected, pairs, n_layers)


@dataclass(frozen=True)
class CellEmbedding:
    vector: np.ndarray
    variant: EmbedderVariant


class CellEmbedder:
    """Per-cell embedding provider bound to a fitted preprocessor.

    For the fixed variants (quantum, random projection) embeddings are
    deterministic functions of (schema, stats, seed, value) and are
    memoized per (column, value). The trainable MLP variant has no fixed
    embedding; callers fetch padded classical vectors instead and the
    perceptron weights live in the model.
    """

    def __init__(
        self,
        schema: DatasetSchema,
        stats: PreprocessStats,
        variant: EmbedderVariant,
        seed: int,
        n_qubits: int = 8,
        n_layers: int = 2,
        text_embeddings: TextEmbeddings | None = None,
    ):
        self.schema = schema
        self.stats = stats
        self.variant = variant
        self.seed = seed
        self.n_qubits = n_qubits
        self.n_layers = n_layers
        self.embed_dim = n_qubits
        self.text_embeddings = text_embeddings
        self._widths = [stats.feature_width(c.name) for c in schema.columns]
        self.d_in_max = max(self._widths)
        self._angle_proj: dict[int, AngleProjection] = {}
        self._rand_proj: dict[int, np.ndarray] = {}
        for j, spec in enumerate(schema.columns):
            width = self._widths[j]
            self._angle_proj[j] = make_angle_projection(seed, width, n_qubits, j)
            rng = substream(seed, EMBED, j)
            self._rand_proj[j] = rng.uniform(
                -1.0, 1.0, size=(width, self.embed_dim)
            ) / np.sqrt(width)
        self._cache: dict[tuple[int, CellValue], np.ndarray] = {}

    def feature_width(self, col: int) -> int:
        return self._widths[col]

    def classical_vector(self, row: int, col: int, value: CellValue) -> np.ndarray:
        spec = self.schema.columns[col]
        raw_text = None
        if spec.kind == ColumnKind.TEXT and self.text_embeddings is not None:
            raw_text = self.text_embeddings.lookup(row, spec.name)
        return encode_cell(
            value, spec.kind, self.stats.for_column(spec.name), spec.name, raw_text
        ).values

    def embed(self, row: int, col: int, value: CellValue) -> np.ndarray:
        """Fixed-variant embedding of one observed cell."""
        if self.variant == EmbedderVariant.CLASSICAL_MLP:
            raise ContractViolation(
                "the classical-MLP variant has no fixed embedding; its weights "
                "live in the model and are applied during the forward pass"
            )
        has_override = (
            self.schema.columns[col].kind == ColumnKind.TEXT
            and self.text_embeddings is not None
            and self.text_embeddings.lookup(row, self.schema.columns[col].name) is not None
        )
        key = (col, value)
        if not has_override and key in self._cache:
            return self._cache[key]
        x_c = self.classical_vector(row, col, value)
        if self.variant == EmbedderVariant.QUANTUM_IQP:
            params = project_to_angles(x_c, self._angle_proj[col], self.n_layers)
            vector = iqp_embed(params).values
        else:
            vector = x_c @ self._rand_proj[col]
        if not has_override:
            self._cache[key] = vector
        return vector

    def embed_table(self, table: Table, mask: Mask | None = None) -> np.ndarray:
        """(rows, columns, embed_dim) embeddings; zeros at missing/masked cells."""
        observed = ~missing_mask(table).matrix
        if mask is not None:
            observed &= ~mask.matrix
        out = np.zeros((table.n_rows, self.schema.n_columns, self.embed_dim))
        for r, row in enumerate(table.rows):
            for c, value in enumerate(row):
                if observed[r, c]:
                    out[r, c] = self.embed(r, c, value)
        return out

    def classical_table(self, table: Table, mask: Mask | None = None) -> np.ndarray:
        """(rows, columns, d_in_max) zero-padded classical vectors for the MLP variant."""
        observed = ~missing_mask(table).matrix
        if mask is not None:
            observed &= ~mask.matrix
        out = np.zeros((table.n_rows, self.schema.n_columns, self.d_in_max))
        for r, row in enumerate(table.rows):
            for c, value in enumerate(row):
                if observed[r, c]:
                    vec = self.classical_vector(r, c, value)
                    out[r, c, : vec.size] = vec
        return out


def embed_cell(
    value: CellValue,
    row: int,
    col: int,
    embedder: CellEmbedder,
    mlp_weights: dict[str, np.ndarray] | None = None,
) -> CellEmbedding:
    """One observed cell -> CellEmbedding under the embedder's variant.

    The classical-MLP variant needs its (trained) perceptron weights, keyed
    ``mlp.w1``, ``mlp.b1``, ``mlp.w2``, ``mlp.b2``.
    """
    if embedder.variant == EmbedderVariant.CLASSICAL_MLP:
        if mlp_weights is None:
            raise ContractViolation("classical-MLP embedding requires mlp weights")
        x = np.zeros(embedder.d_in_max)
        vec = embedder.classical_vector(row, col, value)
        x[: vec.size] = vec
        hidden = np.tanh(x @ mlp_weights["mlp.w1"] + mlp_weights["mlp.b1"])
        vector = hidden @ mlp_weights["mlp.w2"] + mlp_weights["mlp.b2"]
        return CellEmbedding(vector, embedder.variant)
    return CellEmbedding(embedder.embed(row, col, value), embedder.variant)
