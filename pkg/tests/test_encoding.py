"""Numeric encodings: indicator matrices, reference dropping, likert
scores, and empty-category pruning."""

import numpy as np
import pytest

from debtminer import (
    Dataset,
    EncodedMatrix,
    EncodingError,
    SurveySchema,
    VariableSpec,
    drop_empty_categories,
    encode,
)


def test_full_indicator_block_structure(small_data):
    em = encode(small_data, ["housing", "income"], "full-indicator")
    assert em.scheme == "full-indicator"
    assert em.n_rows == small_data.n_rows
    assert em.n_columns == 8
    # each variable contributes exactly one 1 per row
    slices = em.variable_slices()
    assert list(slices) == ["housing", "income"]
    for sl in slices.values():
        assert np.array_equal(em.values[:, sl].sum(axis=1),
                              np.ones(small_data.n_rows))
    assert set(np.unique(em.values)) <= {0.0, 1.0}
    # indicator position matches the stored code
    housing = small_data.column("housing")
    assert np.array_equal(np.argmax(em.values[:, :4], axis=1), housing)
    assert em.column_names()[:4] == [
        "housing_own", "housing_rent", "housing_other", "housing_uncertain",
    ]


def test_reference_dropped_omits_first_category(small_data):
    em = encode(small_data, ["housing"], "reference-dropped")
    assert em.n_columns == 3
    assert [c for _, c in em.columns] == ["rent", "other", "uncertain"]
    housing = small_data.column("housing")
    base = housing == 0
    assert np.array_equal(em.values.sum(axis=1), (~base).astype(float))


def test_likert_scores_are_centered(small_data):
    em = encode(small_data, ["mood"], "likert-numeric")
    assert em.n_columns == 1
    assert em.columns == (("mood", None),)
    assert em.column_names() == ["mood"]
    codes = small_data.column("mood")
    assert np.array_equal(em.values[:, 0], codes - 2.0)


def test_likert_scheme_rejects_unordered_and_uncertain(small_data):
    with pytest.raises(EncodingError, match="categorical"):
        encode(small_data, ["housing"], "likert-numeric")
    # the first uncertain income answer sits in row 1
    with pytest.raises(EncodingError, match="row 1.*no scale position"):
        encode(small_data, ["income"], "likert-numeric")


def test_encode_validation(small_data):
    with pytest.raises(EncodingError, match="unknown scheme"):
        encode(small_data, ["housing"], "one-hot")
    with pytest.raises(EncodingError, match="not in schema"):
        encode(small_data, ["ghost"], "full-indicator")
    with pytest.raises(EncodingError, match="no variables"):
        encode(small_data, [], "full-indicator")


def test_encoded_matrix_consistency_checks():
    with pytest.raises(EncodingError, match="2-D"):
        EncodedMatrix(np.zeros(3), (("v", "a"),), "full-indicator")
    with pytest.raises(EncodingError, match="column metadata"):
        EncodedMatrix(np.zeros((3, 2)), (("v", "a"),), "full-indicator")
    with pytest.raises(EncodingError, match="unknown scheme"):
        EncodedMatrix(np.zeros((3, 1)), (("v", "a"),), "bitmap")


def test_variable_slices_are_contiguous(small_data):
    em = encode(small_data, ["housing", "income", "savings"],
                "full-indicator")
    slices = em.variable_slices()
    stops = [0]
    for name, sl in slices.items():
        assert sl.start == stops[-1]
        stops.append(sl.stop)
    assert stops[-1] == em.n_columns


def test_drop_empty_categories_prunes_unused_columns():
    schema = SurveySchema((
        VariableSpec("color", "categorical", "demographic",
                     ("red", "green", "blue")),
        VariableSpec("debt", "numeric-band", "target", ("no", "yes")),
    ))
    codes = np.array([[0, 0], [0, 1], [2, 0], [2, 1]])
    data = Dataset(schema, codes, ("1", "2", "3", "4"))
    em = encode(data, ["color"], "full-indicator")
    pruned = drop_empty_categories(em)
    assert pruned.n_columns == 2
    assert [c for _, c in pruned.columns] == ["red", "blue"]
    assert np.array_equal(pruned.values.sum(axis=1), np.ones(4))


def test_drop_empty_categories_passthrough(small_data):
    full = encode(small_data, ["housing"], "full-indicator")
    assert drop_empty_categories(full) is full
    scores = encode(small_data, ["mood"], "likert-numeric")
    assert drop_empty_categories(scores) is scores
