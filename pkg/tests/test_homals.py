"""Homogeneity analysis: constraints, loss accounting, scoring of new
rows, and the category-distance diagnostics."""

import numpy as np
import pytest
from sklearn.exceptions import NotFittedError

from conftest import principal_angles, random_indicator_instance
from debtminer import (
    DataValidationError,
    EncodedMatrix,
    EncodingError,
    Homals,
    category_diagnostics,
    encode,
    fit_homals,
)


@pytest.fixture(scope="module")
def fitted():
    em = random_indicator_instance(0)
    model = Homals(n_dims=2, tol=1e-12, max_iter=2000, seed=0).fit(em)
    return em, model


def test_input_validation(small_data):
    h = Homals()
    with pytest.raises(EncodingError, match="EncodedMatrix"):
        h.fit(np.zeros((10, 4)))
    ref = encode(small_data, ["housing"], "reference-dropped")
    with pytest.raises(EncodingError, match="full-indicator"):
        h.fit(ref)

    em = random_indicator_instance(0)
    total = em.n_columns
    m = len(em.variable_slices())
    with pytest.raises(DataValidationError, match="n_dims"):
        Homals(n_dims=0).fit(em)
    with pytest.raises(DataValidationError, match="categories minus"):
        Homals(n_dims=total - m + 1).fit(em)

    # an empty category must be pruned before fitting
    values = em.values.copy()
    values[:, 0] = 0.0
    broken = EncodedMatrix(values=values, columns=em.columns, scheme=em.scheme)
    with pytest.raises(DataValidationError, match="empty category"):
        h.fit(broken)


def test_dimension_cap_by_row_count():
    # 13 rows but 16 free category dimensions, so the row cap binds first
    em = random_indicator_instance(29)
    n = em.n_rows
    with pytest.raises(DataValidationError, match="rows"):
        Homals(n_dims=n).fit(em)


def test_score_constraints(fitted):
    em, model = fitted
    X = model.object_scores_
    n = em.n_rows
    assert np.abs(X.mean(axis=0)).max() < 1e-9
    assert np.abs(X.T @ X - n * np.eye(2)).max() < 1e-7


def test_quantifications_are_category_centroids(fitted):
    em, model = fitted
    X = model.object_scores_
    for var, sl in model.variable_slices_.items():
        Gj = em.values[:, sl]
        centroid = (Gj.T @ X) / Gj.sum(axis=0)[:, None]
        assert np.allclose(model.quantifications_[var], centroid, atol=1e-10)
        assert np.array_equal(model.category_counts_[var],
                              Gj.sum(axis=0).astype(np.int64))


def test_loss_matches_its_definition(fitted):
    em, model = fitted
    X = model.object_scores_
    total = 0.0
    for var, sl in model.variable_slices_.items():
        total += np.sum((X - em.values[:, sl] @ model.quantifications_[var]) ** 2)
    assert model.loss_ == pytest.approx(total, rel=1e-12)
    assert model.loss_history_[-1] == model.loss_


def test_loss_history_is_monotone(fitted):
    _, model = fitted
    diffs = np.diff(model.loss_history_)
    assert (diffs <= 1e-9 * model.loss_history_[0]).all()
    assert model.converged_
    assert model.n_iterations_ == len(model.loss_history_) - 1


def test_final_loss_does_not_depend_on_the_start():
    em = random_indicator_instance(1)
    fits = [
        Homals(n_dims=2, tol=1e-13, max_iter=3000, seed=s).fit(em)
        for s in (0, 1, 2)
    ]
    losses = [f.loss_ for f in fits]
    assert max(losses) - min(losses) <= 1e-9 * losses[0]
    for other in fits[1:]:
        angles = principal_angles(fits[0].object_scores_,
                                  other.object_scores_)
        assert angles.max() < 1e-5


def test_small_instances_escape_degenerate_starts():
    # n = 14 here; random starts used to freeze on a non-optimal
    # invariant subspace after one iteration
    em = random_indicator_instance(3)
    losses = [
        Homals(n_dims=2, tol=1e-14, max_iter=5000, seed=s).fit(em).loss_
        for s in (1, 104, 100)
    ]
    assert max(losses) - min(losses) <= 1e-8 * losses[0]


def test_transform_reproduces_training_scores(fitted):
    # agreement is bounded by the fit tolerance, not machine precision:
    # scores converge linearly while the loss converges quadratically
    em, model = fitted
    back = model.transform(em)
    assert np.abs(back - model.object_scores_).max() < 1e-4
    assert np.array_equal(model.fit_transform(em), model.object_scores_)


def test_transform_scores_unseen_rows(fitted):
    em, model = fitted
    one = EncodedMatrix(values=em.values[:3], columns=em.columns,
                        scheme=em.scheme)
    out = model.transform(one)
    assert out.shape == (3, 2)
    assert np.allclose(out, model.transform(em)[:3])


def test_transform_validation(fitted):
    em, model = fitted
    with pytest.raises(NotFittedError):
        Homals().transform(em)
    with pytest.raises(NotFittedError):
        Homals().loss_
    other = random_indicator_instance(4)
    with pytest.raises(EncodingError, match="columns"):
        model.transform(other)


def test_functional_wrapper_matches_the_estimator():
    em = random_indicator_instance(5)
    a = fit_homals(em, n_dims=2, tol=1e-10, max_iter=1000, seed=3)
    b = Homals(n_dims=2, tol=1e-10, max_iter=1000, seed=3).fit(em)
    assert np.array_equal(a.object_scores_, b.object_scores_)
    assert a.loss_ == b.loss_


def test_one_dimensional_fit():
    em = random_indicator_instance(6)
    model = Homals(n_dims=1, tol=1e-10, max_iter=1000, seed=0).fit(em)
    assert model.object_scores_.shape == (em.n_rows, 1)
    assert model.loss_history_[0] >= model.loss_


# ---------------------------------------------------------------------------
# category diagnostics


def test_diagnostics_report_distances_and_flags(fitted):
    em, model = fitted
    diag = category_diagnostics(model, flag_multiple=2.0)
    assert len(diag.points) == em.n_columns
    dists = np.array([pt.distance for pt in diag.points])
    assert diag.median_distance == pytest.approx(float(np.median(dists)))
    for pt in diag.points:
        expected = np.linalg.norm(
            model.quantifications_[pt.variable][
                [c for _, c in model.columns_ if _ == pt.variable].index(
                    pt.category)
            ]
        )
        assert pt.distance == pytest.approx(expected)
        assert pt.flagged == (pt.distance > 2.0 * diag.median_distance)
    flagged = diag.flagged
    assert all(p.flagged for p in flagged)


def test_diagnostics_flag_disabled_by_infinity(fitted):
    _, model = fitted
    diag = category_diagnostics(model, flag_multiple=np.inf)
    assert diag.flagged == ()
    # a tiny multiple flags everything beyond the median
    tight = category_diagnostics(model, flag_multiple=1e-9)
    assert len(tight.flagged) >= len(tight.points) // 2


def test_diagnostics_uncertain_section(fitted):
    _, model = fitted
    diag = category_diagnostics(model, flag_multiple=2.0)
    section = diag.uncertain_section(("c0",))
    assert section
    assert all(pt.category == "c0" for pt in section)
    assert diag.uncertain_section(("nothing",)) == ()


def test_diagnostics_validation(fitted):
    _, model = fitted
    with pytest.raises(NotFittedError):
        category_diagnostics(Homals(), 2.0)
    with pytest.raises(DataValidationError, match="positive"):
        category_diagnostics(model, 0.0)
