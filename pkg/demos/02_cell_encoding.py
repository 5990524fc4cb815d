"""From raw mixed-type cells to embedding vectors, under all three variants.

Run with: python demos/02_cell_encoding.py
"""

import numpy as np

from qimpute import (
    CellEmbedder,
    ColumnKind,
    ColumnSpec,
    DatasetSchema,
    EmbedderVariant,
    Table,
    encode_cell,
    fit_preprocessor,
    text_embed_hashing,
)

schema = DatasetSchema(
    (
        ColumnSpec("heart_rate", ColumnKind.NUMERIC),
        ColumnSpec("ward", ColumnKind.CATEGORICAL),
        ColumnSpec("note", ColumnKind.TEXT),
    ),
    name="demo",
)
table = Table(
    schema,
    [
        [62.0, "general", "resting comfortably"],
        [88.0, "icu", "needs continuous monitoring"],
        [None, "general", "resting comfortably today"],
        [119.0, "icu", None],
    ],
)

# Fitting uses observed cells only: numeric min/max, categorical vocabulary
# in first-appearance order, per-dimension text ranges.
stats = fit_preprocessor(table, schema)
hr = stats.for_column("heart_rate")
print(f"heart_rate range: [{hr.vmin}, {hr.vmax}]")
print("ward vocabulary:", stats.for_column("ward").vocabulary)

# Numeric cells map affinely onto [0, pi]; categoricals become pi-scaled
# one-hots; text goes through deterministic hashed bag-of-words.
print("\nclassical feature vectors:")
print("  62 bpm ->", encode_cell(62.0, ColumnKind.NUMERIC, hr).values)
print("  119 bpm ->", encode_cell(119.0, ColumnKind.NUMERIC, hr).values)
print("  'icu'  ->", encode_cell("icu", ColumnKind.CATEGORICAL, stats.for_column("ward")).values)
print("  hashing('resting comfortably', dim=8) ->",
      np.round(text_embed_hashing("resting comfortably", 8), 3))

# The three variants share one embedding width so the downstream model
# never changes shape when you swap them.
for variant in (EmbedderVariant.QUANTUM_IQP, EmbedderVariant.RANDOM_PROJECTION):
    embedder = CellEmbedder(schema, stats, variant, seed=7, n_qubits=4, n_layers=2)
    vec = embedder.embed(1, 0, 88.0)
    print(f"\n{variant.value} embedding of 88 bpm:", np.round(vec, 4))
    if variant == EmbedderVariant.QUANTUM_IQP:
        assert np.all(np.abs(vec) <= 1.0)  # Z expectations always in [-1, 1]

# The trainable MLP variant has no fixed embedding: its perceptron weights
# live in the model and train jointly, so here we only fetch its inputs.
mlp = CellEmbedder(schema, stats, EmbedderVariant.CLASSICAL_MLP, seed=7, n_qubits=4)
features = mlp.classical_table(table)
print("\nclassical-MLP input tensor shape (rows, columns, padded width):", features.shape)
