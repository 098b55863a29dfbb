"""Multinomial logistic regression: optimizer behaviour, probability
calibration on known cases, and the gradient against finite differences."""

import numpy as np
import pytest
from sklearn.exceptions import NotFittedError

from conftest import central_differences, norm_scaled_error
from debtminer import (
    DataValidationError,
    MultinomialLogit,
    train_multinomial_lr,
)
from debtminer.classifiers.logistic import loss_and_gradient


def _blobs(n_per=60, gap=4.0, seed=0):
    rng = np.random.default_rng(seed)
    X = np.vstack([
        rng.standard_normal((n_per, 2)) - gap / 2,
        rng.standard_normal((n_per, 2)) + gap / 2,
    ])
    y = np.array(["low"] * n_per + ["high"] * n_per, dtype=object)
    return X, y


def test_intercept_only_model_recovers_class_priors():
    """With no usable predictors the fitted probabilities are the class
    frequencies, since the intercept is unpenalized."""
    X = np.zeros((300, 1))
    y = np.array(["no"] * 200 + ["yes"] * 100, dtype=object)
    model = MultinomialLogit().fit(X, y)
    probs = model.predict_proba(X[:1])[0]
    assert model.classes_ == ("no", "yes")
    assert abs(probs[0] - 2 / 3) < 0.02
    assert abs(probs[1] - 1 / 3) < 0.02


def test_separable_classes_are_fit_perfectly():
    X, y = _blobs()
    model = MultinomialLogit(l2=1e-2, max_iter=1000).fit(X, y)
    assert model.converged_
    pred = model.predict(X)
    assert pred.dtype == object
    assert (pred == y).mean() == 1.0


def test_loss_history_decreases():
    X, y = _blobs(gap=2.0, seed=3)
    model = MultinomialLogit(l2=1e-3).fit(X, y)
    h = model.loss_history_
    assert (np.diff(h) < 0).all()
    assert h[-1] < h[0]
    assert model.loss_ == h[-1]


def test_probability_rows_are_distributions():
    rng = np.random.default_rng(1)
    X = rng.standard_normal((90, 4))
    y = np.array((["a", "b", "c"] * 30), dtype=object)
    model = MultinomialLogit(max_iter=200).fit(X, y)
    P = model.predict_proba(X)
    assert P.shape == (90, 3)
    assert np.abs(P.sum(axis=1) - 1.0).max() < 1e-12
    assert P.min() >= 0.0


def test_reference_class_column_stays_zero():
    X, y = _blobs(seed=5)
    model = MultinomialLogit().fit(X, y)
    assert np.array_equal(model.coef_[:, 0], np.zeros(3))
    # warm start keeps the pin even when the init violates it
    warm = MultinomialLogit().fit(X, y, coef_init=np.ones_like(model.coef_))
    assert np.array_equal(warm.coef_[:, 0], np.zeros(3))


def test_refits_are_deterministic():
    X, y = _blobs(seed=7)
    a = MultinomialLogit(l2=1e-3).fit(X, y)
    b = MultinomialLogit(l2=1e-3).fit(X, y)
    assert np.array_equal(a.coef_, b.coef_)
    wrapped = train_multinomial_lr(X, y, l2=1e-3)
    assert np.array_equal(a.coef_, wrapped.coef_)


def test_fit_validation():
    X, y = _blobs()
    with pytest.raises(DataValidationError, match="length mismatch"):
        MultinomialLogit().fit(X, y[:-1])
    with pytest.raises(DataValidationError, match="at least 2 classes"):
        MultinomialLogit().fit(X, np.array(["same"] * len(y), dtype=object))
    bad = X.copy()
    bad[0, 0] = np.nan
    with pytest.raises(DataValidationError, match="non-finite"):
        MultinomialLogit().fit(bad, y)
    with pytest.raises(DataValidationError, match="nonnegative"):
        MultinomialLogit(l2=-1.0).fit(X, y)
    with pytest.raises(DataValidationError, match="2-D"):
        MultinomialLogit().fit(X[:, 0], y)


def test_predict_validation():
    X, y = _blobs()
    with pytest.raises(NotFittedError):
        MultinomialLogit().predict_proba(X)
    with pytest.raises(NotFittedError):
        MultinomialLogit().loss_
    model = MultinomialLogit().fit(X, y)
    with pytest.raises(DataValidationError, match="predictor count"):
        model.predict(np.zeros((4, 3)))


def test_gradient_matches_central_differences():
    rng = np.random.default_rng(0)
    n, d, c = 40, 3, 3
    Xa = np.hstack([np.ones((n, 1)), rng.standard_normal((n, d))])
    y_idx = rng.integers(0, c, n)
    W = rng.standard_normal((d + 1, c)) * 0.5
    W[:, 0] = 0.0
    l2 = 0.1

    loss, grad = loss_and_gradient(W, Xa, y_idx, l2)
    assert np.array_equal(grad[:, 0], np.zeros(d + 1))

    # the reference column is pinned, so its entries are excluded
    mask = np.ones_like(W, dtype=bool)
    mask[:, 0] = False
    fd = central_differences(
        lambda V: loss_and_gradient(V, Xa, y_idx, l2)[0], W, h=1e-5, mask=mask
    )
    assert norm_scaled_error(fd, grad) < 1e-6


def test_penalty_skips_intercept_and_reference():
    rng = np.random.default_rng(2)
    n, d, c = 30, 2, 3
    Xa = np.hstack([np.ones((n, 1)), rng.standard_normal((n, d))])
    y_idx = rng.integers(0, c, n)

    intercept_only = np.zeros((d + 1, c))
    intercept_only[0, :] = rng.standard_normal(c)
    reference_only = np.zeros((d + 1, c))
    reference_only[:, 0] = rng.standard_normal(d + 1)
    for W in (intercept_only, reference_only):
        with_ridge, _ = loss_and_gradient(W, Xa, y_idx, 5.0)
        without, _ = loss_and_gradient(W, Xa, y_idx, 0.0)
        assert with_ridge == pytest.approx(without, abs=1e-15)

    W = np.zeros((d + 1, c))
    W[2, 1] = 0.7
    with_ridge, _ = loss_and_gradient(W, Xa, y_idx, 5.0)
    without, _ = loss_and_gradient(W, Xa, y_idx, 0.0)
    assert with_ridge - without == pytest.approx(0.5 * 5.0 * 0.7**2)
