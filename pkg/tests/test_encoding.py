"""Tests for preprocessing, classical encoding, and the embedding variants."""

import numpy as np
import pytest

from qimpute.encoding import (
    CategoricalColumnStats,
    CellEmbedder,
    EmbedderVariant,
    NumericColumnStats,
    TextEmbeddings,
    embed_cell,
    encode_cell,
    fit_preprocessor,
    load_text_embeddings,
    make_angle_projection,
    project_to_angles,
    text_embed_hashing,
)
from qimpute.errors import ContractViolation, FitError
from qimpute.tabular import ColumnKind, ColumnSpec, DatasetSchema, Table

SCHEMA = DatasetSchema(
    (
        ColumnSpec("reading", ColumnKind.NUMERIC),
        ColumnSpec("grade", ColumnKind.CATEGORICAL),
        ColumnSpec("note", ColumnKind.TEXT),
    ),
    name="enc",
)


def make_table():
    return Table(
        SCHEMA,
        [
            [2.0, "a", "chest pain"],
            [4.0, "b", "pain chest"],
            [None, "a", "all clear today"],
            [6.0, None, "chest pain again"],
        ],
    )


# ---------------------------------------------------------------------------
# fit_preprocessor
# ---------------------------------------------------------------------------


def test_fit_numeric_min_max_from_observed_only():
    stats = fit_preprocessor(make_table(), SCHEMA)
    num = stats.for_column("reading")
    assert num.vmin == 2.0 and num.vmax == 6.0
    assert not num.degenerate


def test_fit_categorical_first_appearance_order():
    stats = fit_preprocessor(make_table(), SCHEMA)
    assert stats.for_column("grade").vocabulary == ("a", "b")


def test_fit_constant_column_flagged_degenerate():
    schema = DatasetSchema((ColumnSpec("k", ColumnKind.NUMERIC),))
    stats = fit_preprocessor(Table(schema, [[5.0], [5.0], [5.0]]), schema)
    col = stats.for_column("k")
    assert col.vmin == col.vmax == 5.0
    assert col.degenerate


def test_fit_error_names_empty_column():
    schema = DatasetSchema((ColumnSpec("empty", ColumnKind.NUMERIC),))
    with pytest.raises(FitError, match="empty"):
        fit_preprocessor(Table(schema, [[None], [None]]), schema)


def test_fit_deterministic():
    a = fit_preprocessor(make_table(), SCHEMA)
    b = fit_preprocessor(make_table(), SCHEMA)
    assert a.for_column("reading") == b.for_column("reading")
    assert np.array_equal(a.for_column("note").dim_min, b.for_column("note").dim_min)


# ---------------------------------------------------------------------------
# encode_cell
# ---------------------------------------------------------------------------


def test_numeric_endpoints_and_midpoint():
    stats = NumericColumnStats(vmin=2.0, vmax=6.0)
    assert encode_cell(2.0, ColumnKind.NUMERIC, stats).values[0] == 0.0
    assert encode_cell(6.0, ColumnKind.NUMERIC, stats).values[0] == np.pi
    assert encode_cell(4.0, ColumnKind.NUMERIC, stats).values[0] == pytest.approx(np.pi / 2)


def test_numeric_out_of_range_clamped():
    stats = NumericColumnStats(vmin=0.0, vmax=1.0)
    assert encode_cell(-5.0, ColumnKind.NUMERIC, stats).values[0] == 0.0
    assert encode_cell(9.0, ColumnKind.NUMERIC, stats).values[0] == np.pi


def test_numeric_degenerate_encodes_zero():
    stats = NumericColumnStats(vmin=3.0, vmax=3.0)
    assert encode_cell(3.0, ColumnKind.NUMERIC, stats).values[0] == 0.0


def test_categorical_one_hot():
    stats = CategoricalColumnStats(vocabulary=("a", "b", "c"))
    vec = encode_cell("b", ColumnKind.CATEGORICAL, stats).values
    assert np.array_equal(vec, np.array([0.0, np.pi, 0.0]))


def test_unknown_category_zero_vector_and_counter():
    stats = CategoricalColumnStats(vocabulary=("a", "b"))
    vec = encode_cell("zzz", ColumnKind.CATEGORICAL, stats).values
    assert np.array_equal(vec, np.zeros(2))
    assert stats.unknown_seen == 1


def test_encoding_missing_cell_is_contract_violation():
    stats = NumericColumnStats(vmin=0.0, vmax=1.0)
    with pytest.raises(ContractViolation):
        encode_cell(None, ColumnKind.NUMERIC, stats)


def test_text_encoding_in_angle_range():
    stats = fit_preprocessor(make_table(), SCHEMA)
    vec = encode_cell("chest pain", ColumnKind.TEXT, stats.for_column("note")).values
    assert vec.shape == (16,)
    assert np.all(vec >= 0.0) and np.all(vec <= np.pi)


# ---------------------------------------------------------------------------
# text_embed_hashing
# ---------------------------------------------------------------------------


def test_hashing_empty_text_is_zero():
    assert np.array_equal(text_embed_hashing("", 8), np.zeros(8))
    assert np.array_equal(text_embed_hashing("   ", 8), np.zeros(8))


def test_hashing_deterministic_and_case_insensitive():
    a = text_embed_hashing("Chest Pain", 16)
    b = text_embed_hashing("chest pain", 16)
    assert np.array_equal(a, b)


def test_hashing_bag_of_words_order_invariance():
    a = text_embed_hashing("chest pain", 16)
    b = text_embed_hashing("pain chest", 16)
    assert np.array_equal(a, b)


def test_hashing_nonzero_is_unit_norm():
    v = text_embed_hashing("one two three", 16)
    assert np.linalg.norm(v) == pytest.approx(1.0)


# ---------------------------------------------------------------------------
# angle projection
# ---------------------------------------------------------------------------


def test_projection_reconstructible_bitwise():
    a = make_angle_projection(7, 3, 8)
    b = make_angle_projection(7, 3, 8)
    assert np.array_equal(a.matrix, b.matrix)
    c = make_angle_projection(8, 3, 8)
    assert not np.array_equal(a.matrix, c.matrix)


def test_projection_entry_scale():
    proj = make_angle_projection(0, 4, 8)
    assert np.all(np.abs(proj.matrix) <= 1.0 / np.sqrt(4))


def test_project_zero_vector_gives_zero_angles():
    proj = make_angle_projection(1, 3, 4)
    params = project_to_angles(np.zeros(3), proj, n_layers=2)
    assert np.all(params.singles == 0.0) and np.all(params.pairs == 0.0)


def test_project_single_feature_direct():
    from qimpute.encoding import AngleProjection

    matrix = np.zeros((1, 4))
    matrix[0, 0] = 1.0
    proj = AngleProjection(matrix=matrix, seed=0)
    params = project_to_angles(np.array([np.pi]), proj, n_layers=1)
    assert params.singles[0, 0] == np.pi
    assert np.all(params.singles[0, 1:] == 0.0)
    assert np.all(params.pairs == 0.0)


def test_project_matches_naive_matmul():
    rng = np.random.default_rng(5)
    proj = make_angle_projection(3, 5, 6)
    x = rng.uniform(0, np.pi, size=5)
    params = project_to_angles(x, proj, n_layers=2)
    naive = np.array([sum(x[i] * proj.matrix[i, j] for i in range(5)) for j in range(6)])
    assert np.allclose(params.singles[0], naive, atol=1e-12)
    slot = 0
    for j in range(6):
        for k in range(j + 1, 6):
            assert params.pairs[0, slot] == pytest.approx(naive[j] * naive[k], abs=1e-12)
            slot += 1
    assert np.array_equal(params.singles[0], params.singles[1])


def test_project_dimension_mismatch():
    proj = make_angle_projection(1, 3, 4)
    with pytest.raises(ValueError, match="shape"):
        project_to_angles(np.zeros(5), proj, n_layers=1)


# ---------------------------------------------------------------------------
# CellEmbedder variants
# ---------------------------------------------------------------------------


def make_embedder(variant, seed=3):
    table = make_table()
    stats = fit_preprocessor(table, SCHEMA)
    return table, CellEmbedder(SCHEMA, stats, variant, seed=seed, n_qubits=4, n_layers=2)


def test_quantum_embedding_of_min_value_is_all_ones():
    # numeric min encodes to angle 0, the projection of zero is zero, and the
    # zero-angle circuit returns |0...0|, so every expectation is 1.
    table, emb = make_embedder(EmbedderVariant.QUANTUM_IQP)
    vec = emb.embed(0, 0, 2.0)
    assert np.allclose(vec, 1.0, atol=1e-12)


def test_quantum_embedding_bounds():
    table, emb = make_embedder(EmbedderVariant.QUANTUM_IQP)
    for r, row in enumerate(table.rows):
        for c, v in enumerate(row):
            if v is None:
                continue
            vec = emb.embed(r, c, v)
            assert np.all(vec >= -1.0) and np.all(vec <= 1.0)


def test_random_projection_matches_hand_matmul():
    table, emb = make_embedder(EmbedderVariant.RANDOM_PROJECTION)
    x_c = emb.classical_vector(0, 1, "a")
    expected = x_c @ emb._rand_proj[1]
    assert np.array_equal(emb.embed(0, 1, "a"), expected)


def test_embedding_determinism_across_instances():
    _, emb1 = make_embedder(EmbedderVariant.QUANTUM_IQP, seed=9)
    _, emb2 = make_embedder(EmbedderVariant.QUANTUM_IQP, seed=9)
    assert np.array_equal(emb1.embed(0, 0, 3.3), emb2.embed(0, 0, 3.3))


def test_variant_isolation_same_shapes():
    table = make_table()
    vecs = {}
    for variant in (EmbedderVariant.QUANTUM_IQP, EmbedderVariant.RANDOM_PROJECTION):
        _, emb = make_embedder(variant)
        vecs[variant] = emb.embed_table(table)
    shapes = {v.shape for v in vecs.values()}
    assert len(shapes) == 1


def test_mlp_variant_has_no_fixed_embedding():
    _, emb = make_embedder(EmbedderVariant.CLASSICAL_MLP)
    with pytest.raises(ContractViolation):
        emb.embed(0, 0, 2.0)


def test_embed_cell_mlp_uses_weights():
    _, emb = make_embedder(EmbedderVariant.CLASSICAL_MLP)
    rng = np.random.default_rng(0)
    weights = {
        "mlp.w1": rng.normal(size=(emb.d_in_max, 6)),
        "mlp.b1": np.zeros(6),
        "mlp.w2": rng.normal(size=(6, emb.embed_dim)),
        "mlp.b2": np.zeros(emb.embed_dim),
    }
    out = embed_cell(2.0, 0, 0, emb, weights)
    x = np.zeros(emb.d_in_max)
    x[0] = 0.0  # value 2.0 is the column min -> angle 0
    expected = np.tanh(x @ weights["mlp.w1"]) @ weights["mlp.w2"]
    assert np.allclose(out.vector, expected, atol=1e-12)


def test_embed_table_zeroes_missing_cells():
    table, emb = make_embedder(EmbedderVariant.QUANTUM_IQP)
    out = emb.embed_table(table)
    assert out.shape == (4, 3, 4)
    assert np.all(out[2, 0] == 0.0)  # missing numeric cell
    assert np.all(out[3, 1] == 0.0)  # missing categorical cell


def test_classical_table_padding():
    table, emb = make_embedder(EmbedderVariant.CLASSICAL_MLP)
    out = emb.classical_table(table)
    assert out.shape == (4, 3, emb.d_in_max)
    assert emb.d_in_max == 16  # text dimension dominates
    # numeric column occupies slot 0 only
    assert np.all(out[0, 0, 1:] == 0.0)


# ---------------------------------------------------------------------------
# precomputed text embeddings
# ---------------------------------------------------------------------------


def test_load_text_embeddings(tmp_path):
    path = tmp_path / "emb.csv"
    path.write_text(
        "row_id,column_name,e_0,e_1\n"
        "0,note,0.5,0.25\n"
        "1,note,-0.5,1.0\n"
    )
    emb = load_text_embeddings(path)
    assert emb.dim == 2
    assert np.array_equal(emb.lookup(0, "note"), np.array([0.5, 0.25]))
    assert emb.lookup(5, "note") is None


def test_text_override_changes_fit_and_encoding(tmp_path):
    table = make_table()
    overrides = TextEmbeddings(
        dim=2,
        vectors={
            (r, "note"): np.array([float(r), 1.0 - float(r)]) for r in range(4)
        },
    )
    stats = fit_preprocessor(table, SCHEMA, text_embeddings=overrides)
    note = stats.for_column("note")
    assert note.dim == 2
    assert note.dim_min[0] == 0.0 and note.dim_max[0] == 3.0
    emb = CellEmbedder(
        SCHEMA,
        stats,
        EmbedderVariant.RANDOM_PROJECTION,
        seed=1,
        n_qubits=4,
        text_embeddings=overrides,
    )
    x = emb.classical_vector(3, 2, "chest pain again")
    # raw override (3, -2) rescaled per fitted dims: dim0 -> pi, dim1 clamped to 0
    assert x[0] == pytest.approx(np.pi)
    assert x[1] == pytest.approx(0.0)


def test_load_text_embeddings_bad_header(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("row,col,e_0\n0,note,1.0\n")
    with pytest.raises(Exception, match="header"):
        load_text_embeddings(path)
