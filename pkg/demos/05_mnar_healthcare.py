"""The synthetic healthcare generator and its not-at-random missingness.

Run with: python demos/05_mnar_healthcare.py
"""

import numpy as np

from qimpute import (
    EmbedderVariant,
    export_embeddings,
    fit_preprocessor,
    synth_healthcare_generate,
)

data = synth_healthcare_generate(n_rows=400, seed=3)
schema = data.schema
diag = schema.index("diagnosis")
bp = schema.index("blood_pressure")
hr = schema.index("heart_rate")

# Blood pressure is missing exactly when the diagnosis is stable, so the
# missingness itself carries information (MNAR). The true values still
# exist in the sidecar, which is what the benchmark scores against.
stable = [r for r in range(400) if data.table.rows[r][diag] == "stable"]
print(f"{len(stable)} of 400 rows are stable; all of their blood pressures are missing:")
print("  missing in working table:",
      all(data.table.rows[r][bp] is None for r in stable))
print("  present in truth sidecar:",
      all(data.truth.rows[r][bp] is not None for r in stable))

# The vitals are diagnosis-conditioned Gaussian mixtures, far enough apart
# that the missing values are genuinely learnable from the rest of the row.
for label in ("stable", "guarded", "critical"):
    rates = [row[hr] for row in data.truth.rows if row[diag] == label]
    print(f"  heart_rate | {label:<8} mean {np.mean(rates):6.1f}  std {np.std(rates):4.1f}")

# Labeled embedding vectors can be exported for external visualization
# (t-SNE and friends); one row per table row, tagged with the diagnosis.
stats = fit_preprocessor(data.table, schema)
out = "healthcare_embeddings.csv"
export_embeddings(
    data.table, schema, stats, EmbedderVariant.QUANTUM_IQP,
    seed=3, label_column="diagnosis", path=out, mode="row_mean",
)
print(f"\nwrote {out} (row-mean quantum embeddings, labeled by diagnosis)")
