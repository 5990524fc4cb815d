"""Tests for the synthetic healthcare generator and the toy table."""

import numpy as np

from qimpute.datasets import (
    DIAGNOSES,
    HEALTHCARE_SCHEMA,
    make_toy_table,
    synth_healthcare_generate,
)
from qimpute.tabular import ColumnKind, MaskProvenance, load_csv, save_csv


def test_full_scale_shape():
    data = synth_healthcare_generate(10_000, seed=0)
    assert data.table.n_rows == 10_000
    assert data.table.schema.n_columns == 20


def test_shape_and_column_split():
    data = synth_healthcare_generate(50, seed=4)
    assert data.table.n_rows == 50
    assert data.table.schema.n_columns == 20
    kinds = [c.kind for c in data.schema.columns]
    assert kinds.count(ColumnKind.NUMERIC) == 12
    assert kinds.count(ColumnKind.CATEGORICAL) == 6
    assert kinds.count(ColumnKind.TEXT) == 2


def test_mnar_rule_blood_pressure_missing_iff_stable():
    data = synth_healthcare_generate(500, seed=11)
    diag = HEALTHCARE_SCHEMA.index("diagnosis")
    bp = HEALTHCARE_SCHEMA.index("blood_pressure")
    for row in data.table.rows:
        if row[diag] == "stable":
            assert row[bp] is None
        else:
            assert row[bp] is not None


def test_truth_sidecar_is_complete():
    data = synth_healthcare_generate(200, seed=2)
    for row in data.truth.rows:
        assert all(v is not None for v in row)


def test_mnar_mask_provenance_and_alignment():
    data = synth_healthcare_generate(120, seed=6)
    assert data.mnar_mask.provenance is MaskProvenance.INJECTED_MNAR
    bp = HEALTHCARE_SCHEMA.index("blood_pressure")
    got = {r for r in range(120) if data.table.rows[r][bp] is None}
    expected = set(np.flatnonzero(data.mnar_mask.matrix[:, bp]).tolist())
    assert got == expected
    # nothing else masked
    other = data.mnar_mask.matrix.copy()
    other[:, bp] = False
    assert not other.any()


def test_generator_deterministic():
    a = synth_healthcare_generate(80, seed=13)
    b = synth_healthcare_generate(80, seed=13)
    assert a.truth.content_hash() == b.truth.content_hash()
    assert a.table.content_hash() == b.table.content_hash()
    c = synth_healthcare_generate(80, seed=14)
    assert a.truth.content_hash() != c.truth.content_hash()


def test_class_conditional_heart_rate_separation():
    data = synth_healthcare_generate(1500, seed=1)
    diag = HEALTHCARE_SCHEMA.index("diagnosis")
    hr = HEALTHCARE_SCHEMA.index("heart_rate")
    stable = [r[hr] for r in data.truth.rows if r[diag] == "stable"]
    critical = [r[hr] for r in data.truth.rows if r[diag] == "critical"]
    pooled_std = np.sqrt((np.var(stable) + np.var(critical)) / 2)
    assert np.mean(critical) - np.mean(stable) >= 2 * pooled_std


def test_diagnosis_values_only_expected():
    data = synth_healthcare_generate(300, seed=8)
    diag = HEALTHCARE_SCHEMA.index("diagnosis")
    assert {r[diag] for r in data.truth.rows} <= set(DIAGNOSES)


def test_generated_round_trip(tmp_path):
    data = synth_healthcare_generate(60, seed=3)
    path = tmp_path / "hc.csv"
    save_csv(data.table, path)
    back = load_csv(path, HEALTHCARE_SCHEMA)
    assert back.content_hash() == data.table.content_hash()


def test_toy_table_structure():
    table = make_toy_table(n_rows=50, seed=7)
    assert table.n_rows == 50
    for row in table.rows:
        x1 = row[0]
        assert row[1] == 0.8 * x1 + 0.1
        assert row[2] == 1.0 - x1
        assert row[3] == ("hi" if x1 > 0.5 else "lo")
    assert make_toy_table(50, 7).content_hash() == table.content_hash()
